#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "support/oracles.hpp"
#include "sweep/catalog.hpp"
#include "sweep/talweg.hpp"

using namespace sweep;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const SweepingProcess& by_name(const char* name) {
  const CatalogEntry* e = find_catalog_entry(name);
  REQUIRE(e != nullptr);
  return e->process;
}

}  // namespace

TEST_CASE("talweg of the shrinking disk is identically one") {
  const auto& S = by_name("shrinking_disk");
  for (const double t : {0.0, 0.3, 0.6, 0.9}) {
    const TalwegPoint p = talweg_at(S, t, 64);
    CHECK(p.phi_up == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.phi_sym == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(p.critical);
  }
}

TEST_CASE("talweg of the quadratic sublevel follows the closed form") {
  const auto& S = by_name("sublevel_quadratic");
  for (const double t : {-0.25, -0.16, -0.09, -0.01}) {
    const TalwegPoint p = talweg_at(S, t, 64);
    const double expect = 1.0 / (2.0 * std::sqrt(-t));
    CHECK(p.phi_up == doctest::Approx(expect).epsilon(1e-7));
    CHECK(norm(p.argmax) == doctest::Approx(std::sqrt(-t)).epsilon(1e-6));
  }
  // the slice degenerates to a point at t = 0: vertical normal
  const TalwegPoint tip = talweg_at(S, 0.0, 64);
  CHECK(tip.critical);
  CHECK(std::isinf(tip.phi_up));
}

TEST_CASE("expanding disk: zero oriented talweg, positive symmetric talweg") {
  const auto& S = by_name("expanding_disk");
  const TalwegPoint p = talweg_at(S, 0.5, 64);
  CHECK(p.phi_up == doctest::Approx(0.0));
  // |R'| / |grad| = 1 for the unit-speed radius
  CHECK(p.phi_sym == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("oscillatory interval: phi_up = max(0, -h') from the jet oracle") {
  const auto& S = by_name("oscillatory_interval");
  for (const double t : {0.06, 0.1, 0.2, 0.29}) {
    const TalwegPoint p = talweg_at(S, t, 8);
    const double expect = std::max(0.0, -oracle::osc_h_prime(t));
    CHECK(p.phi_up == doctest::Approx(expect).epsilon(1e-9));
  }
  // frozen spot value (hand quadrature oracle, see oracles.hpp)
  CHECK(talweg_at(S, 0.1, 8).phi_up ==
        doctest::Approx(16.9476505740).epsilon(1e-8));
}

TEST_CASE("grid refinement never lowers the sampled max") {
  const auto& S = by_name("sublevel_quadratic");
  for (const double t : {-0.2, -0.1}) {
    const double coarse = talweg_at(S, t, 16).phi_up;
    const double fine = talweg_at(S, t, 32).phi_up;
    CHECK(fine >= coarse - 1e-9);
  }
}

TEST_CASE("sample_talweg: uniform grid with one bisection pass") {
  const auto& S = by_name("shrinking_disk");
  const TalwegTable table = sample_talweg(S, 0.0, 0.5, 21, 32);
  CHECK(table.size() >= 21);
  CHECK(table.size() <= 84);
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(table.phi_up[i] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(table.phi_up[i] <= table.phi_sym[i] + 1e-12);
  }
  for (std::size_t i = 1; i < table.size(); ++i)
    CHECK(table.grid[i] > table.grid[i - 1]);
}

TEST_CASE("sampled quadratic talweg matches the closed form on the window") {
  const auto& S = by_name("sublevel_quadratic");
  const TalwegTable table = sample_talweg(S, -0.25, -1e-4, 33, 48);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double expect = 1.0 / (2.0 * std::sqrt(-table.grid[i]));
    CHECK(table.phi_up[i] == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("integrals of the closed-form talwegs") {
  const auto& disk = by_name("shrinking_disk");
  const TalwegTable t1 = sample_talweg_refined(disk, 0.0, 0.5, 33, 32);
  const TalwegIntegral i1 = integrate_talweg(t1, 0.0, 0.5);
  CHECK(i1.value == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(i1.verdict == IntegralVerdict::convergent);

  const auto& quad = by_name("sublevel_quadratic");
  const TalwegTable t2 = sample_talweg_refined(quad, -0.25, 0.0, 65, 48);
  const TalwegIntegral i2 = integrate_talweg(t2, -0.25, 0.0);
  CHECK(i2.value == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(i2.verdict == IntegralVerdict::convergent);
}

TEST_CASE("oscillatory window diverges at the left endpoint") {
  const auto& S = by_name("oscillatory_interval");
  const TalwegTable table = sample_talweg_refined(S, 0.0, 0.3, 65, 8);
  const TalwegIntegral integral = integrate_talweg(table, 0.0, 0.3);
  CHECK(integral.verdict == IntegralVerdict::divergent_at_a);
  // estimates on shrinking left-truncated windows keep growing
  const TalwegTable t1 = sample_talweg_refined(S, 0.05, 0.3, 65, 8);
  const TalwegTable t2 = sample_talweg_refined(S, 0.0125, 0.3, 65, 8);
  const TalwegTable t3 = sample_talweg_refined(S, 0.003125, 0.3, 65, 8);
  const double v1 = integrate_talweg(t1, 0.05, 0.3).value;
  const double v2 = integrate_talweg(t2, 0.0125, 0.3).value;
  const double v3 = integrate_talweg(t3, 0.003125, 0.3).value;
  CHECK(v2 > v1);
  CHECK(v3 > v2);
  // quadrature oracle: L(0.05) ~ 1.0931, L(0.0125) ~ 1.9741, L(0.003125) ~ 2.8565
  CHECK(v1 == doctest::Approx(1.0931).epsilon(0.04));
  CHECK(v2 == doctest::Approx(1.9741).epsilon(0.04));
  CHECK(v3 == doctest::Approx(2.8565).epsilon(0.04));
}

TEST_CASE("critical node strictly inside the window is an error") {
  const auto& quad = by_name("sublevel_quadratic");
  // t = 0 is critical; put it inside by extending the domain artificially
  TalwegTable table = sample_talweg_refined(quad, -0.25, 0.0, 33, 32);
  // shift the declared window so the critical endpoint is interior
  table.grid.push_back(0.1);
  table.phi_up.push_back(1.0);
  table.phi_sym.push_back(1.0);
  table.argmax_points.push_back(Vec{0.0, 0.0});
  table.critical.push_back(0);
  CHECK_THROWS_WITH_AS(integrate_talweg(table, -0.25, 0.1),
                       doctest::Contains("critical"), ProcessError);
}

TEST_CASE("bisection refinement settles jumps within a few rounds") {
  const auto& S = by_name("two_intervals");
  const TalwegTable table = sample_talweg(S, 0.1, 0.5, 17, 8);
  // phi_up is identically 1 here; refinement must not introduce jumps
  for (std::size_t i = 0; i + 1 < table.size(); ++i)
    CHECK(std::abs(table.phi_up[i + 1] - table.phi_up[i]) <
          0.25 * (1.0 + std::min(table.phi_up[i], table.phi_up[i + 1])));
}
