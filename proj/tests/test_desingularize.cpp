#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sweep/catalog.hpp"
#include "sweep/desingularize.hpp"
#include "sweep/dynamics.hpp"
#include "sweep/random.hpp"

using namespace sweep;

namespace {

const SweepingProcess& by_name(const char* name) {
  const CatalogEntry* e = find_catalog_entry(name);
  REQUIRE(e != nullptr);
  return e->process;
}

}  // namespace

TEST_CASE("majorant floors the talweg at one") {
  const auto& disk = by_name("shrinking_disk");
  const TalwegTable t1 = sample_talweg_refined(disk, 0.0, 0.5, 17, 32);
  const TalwegTable m1 = build_majorant(t1);
  for (std::size_t i = 0; i < m1.size(); ++i)
    CHECK(m1.phi_up[i] == doctest::Approx(1.0).epsilon(1e-9));

  const auto& grow = by_name("expanding_disk");
  const TalwegTable t2 = sample_talweg_refined(grow, 0.0, 1.0, 17, 32);
  const TalwegTable m2 = build_majorant(t2);
  for (std::size_t i = 0; i < m2.size(); ++i) {
    CHECK(t2.phi_up[i] == doctest::Approx(0.0));
    CHECK(m2.phi_up[i] == 1.0);
  }

  const auto& quad = by_name("sublevel_quadratic");
  const TalwegTable t3 = sample_talweg_refined(quad, -0.25, -0.01, 17, 32);
  const TalwegTable m3 = build_majorant(t3);
  for (std::size_t i = 0; i < m3.size(); ++i)
    CHECK(m3.phi_up[i] == doctest::Approx(t3.phi_up[i]));  // already >= 1
}

TEST_CASE("shrinking disk: theta is the identity shift") {
  const auto& disk = by_name("shrinking_disk");
  const DesingularizationMap map = build_map(disk, 0.0, 0.5, 33);
  CHECK(map.rho == doctest::Approx(0.5).epsilon(1e-9));
  for (const double r : {0.0, 0.1, 0.25, 0.4, 0.5}) {
    CHECK(map.psi(r) == doctest::Approx(r).epsilon(1e-9));
    CHECK(map.psi_prime(r) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("quadratic sublevel: closed-form reparametrization") {
  // theta(t) = 0.5 - sqrt(-t), rho = 0.5, psi(r) = -(0.5 - r)^2,
  // psi'(r) = 2 (0.5 - r)
  const auto& quad = by_name("sublevel_quadratic");
  const DesingularizationMap map = build_map(quad, -0.25, 0.0, 65);
  CHECK(map.rho == doctest::Approx(0.5).epsilon(2e-3));
  for (const double r : {0.05, 0.1, 0.2, 0.3, 0.45}) {
    const double expect_psi = -(0.5 - r) * (0.5 - r);
    const double expect_prime = 2.0 * (0.5 - r);
    CHECK(map.psi(r) == doctest::Approx(expect_psi).epsilon(5e-3));
    CHECK(map.psi_prime(r) == doctest::Approx(expect_prime).epsilon(5e-3));
  }
  CHECK(map.psi(0.0) == doctest::Approx(-0.25));
  CHECK(map.psi(map.rho) == doctest::Approx(0.0));
}

TEST_CASE("map invariants: round trips, monotonicity, derivative cap") {
  const auto& quad = by_name("sublevel_quadratic");
  const DesingularizationMap map = build_map(quad, -0.25, 0.0, 65);

  // theta strictly increasing with psi as its interpolated inverse
  for (std::size_t i = 1; i < map.theta_v.size(); ++i) {
    CHECK(map.theta_v[i] > map.theta_v[i - 1]);
    CHECK(map.theta_t[i] > map.theta_t[i - 1]);
  }
  CHECK(map.psi(0.0) == doctest::Approx(-0.25).epsilon(1e-9));
  CHECK(map.psi(map.rho) == doctest::Approx(0.0).epsilon(1e-9));

  // psi(theta(t)) = t at the nodes
  for (std::size_t i = 0; i < map.theta_v.size(); ++i)
    CHECK(map.psi(map.theta_v[i]) ==
          doctest::Approx(map.theta_t[i]).epsilon(1e-6));

  // theta(psi(r)) = r on a uniform r grid
  for (int k = 1; k < 32; ++k) {
    const double r = map.rho * k / 32.0;
    CHECK(map.theta(map.psi(r)) == doctest::Approx(r).epsilon(1e-6));
  }

  // psi(theta(t)) = t off the nodes as well
  for (int k = 1; k < 16; ++k) {
    const double t = -0.25 + 0.24 * k / 16.0;
    CHECK(map.psi(map.theta(t)) == doctest::Approx(t).epsilon(1e-6));
  }

  // psi' never exceeds one and psi strictly increases across the grid
  double prev = map.psi(0.0) - 1e-12;
  for (int k = 0; k <= 256; ++k) {
    const double r = map.rho * k / 256.0;
    CHECK(map.psi_prime(r) <= 1.0 + 1e-12);
    const double v = map.psi(r);
    CHECK(v > prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("desingularized modulus stays below one") {
  const auto& disk = by_name("shrinking_disk");
  const DesingularizationMap m1 = build_map(disk, 0.0, 0.5, 33);
  const DesingularizationCheck c1 = verify_desingularized(disk, m1, 64);
  CHECK(c1.pass);
  CHECK(c1.max_product == doctest::Approx(1.0).epsilon(1e-6));

  const auto& quad = by_name("sublevel_quadratic");
  const DesingularizationMap m2 = build_map(quad, -0.25, 0.0, 65);
  const DesingularizationCheck c2 = verify_desingularized(quad, m2, 64);
  CHECK(c2.pass);
  CHECK(c2.max_product == doctest::Approx(1.0).epsilon(1e-3));

  const auto& grow = by_name("expanding_disk");
  const DesingularizationMap m3 = build_map(grow, 0.0, 1.0, 33);
  const DesingularizationCheck c3 = verify_desingularized(grow, m3, 64);
  CHECK(c3.pass);
  CHECK(c3.max_product == doctest::Approx(0.0));
}

TEST_CASE("no desingularization for the divergent counterexample") {
  const auto& osc = by_name("oscillatory_interval");
  CHECK_THROWS_WITH_AS(build_map(osc, 0.0, 0.3, 33),
                       doctest::Contains("divergent"), ProcessError);
}

TEST_CASE("sigma tables follow the closed forms") {
  const auto& disk = by_name("shrinking_disk");
  const SigmaTable s1 = sigma_from_talweg(disk, 0.0, 0.5);
  for (const double t : {0.0, 0.1, 0.3, 0.5})
    CHECK(s1.at(t) == doctest::Approx(t).epsilon(1e-6));

  const auto& quad = by_name("sublevel_quadratic");
  const SigmaTable s2 = sigma_from_talweg(quad, -0.25, 0.0);
  for (const double t : {-0.25, -0.16, -0.04, -0.01})
    CHECK(s2.at(t) ==
          doctest::Approx(0.5 - std::sqrt(-t)).epsilon(2e-3));

  const auto& grow = by_name("expanding_disk");
  const SigmaTable s3 = sigma_from_talweg(grow, 0.0, 1.0);
  CHECK(s3.at(1.0) == doctest::Approx(0.0));
}

TEST_CASE("orbit lengths are controlled by sigma increments") {
  const auto& quad = by_name("sublevel_quadratic");
  const SigmaTable sigma = sigma_from_talweg(quad, -0.25, 0.0);
  DeterministicRng rng(31);
  for (int k = 0; k < 8; ++k) {
    const double t1 = rng.uniform(-0.24, -0.1);
    const double t2 = t1 + rng.uniform(0.02, 0.08);
    const auto boundary = sample_boundary(quad, t1, 32);
    const Vec& x0 = boundary[static_cast<std::size_t>(rng.next_u64() %
                                                      boundary.size())];
    const Orbit orbit = refine_to_orbit(quad, t1, t2, x0, 1e-6);
    CHECK(orbit.length <= sigma.at(t2) - sigma.at(t1) + 1e-3);
  }
}
