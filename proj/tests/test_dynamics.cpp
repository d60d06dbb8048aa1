#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "support/oracles.hpp"
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

TEST_CASE("catching up with the shrinking disk is exactly radial") {
  const auto& S = by_name("shrinking_disk");
  const CatchingUpSequence seq = catching_up(S, 0.0, 0.5, 10, Vec{1.0, 0.0});
  REQUIRE(seq.size() == 11);
  CHECK_FALSE(seq.error_mark);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq.points[i][0] == doctest::Approx(1.0 - seq.times[i]).epsilon(1e-12));
    CHECK(seq.points[i][1] == 0.0);
  }
  CHECK(seq.length == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("members of an expanding disk never move") {
  const auto& S = by_name("expanding_disk");
  const CatchingUpSequence seq = catching_up(S, 0.0, 1.0, 16, Vec{1.0, 0.0});
  CHECK(seq.length == 0.0);
  CHECK(seq.points.back()[0] == 1.0);
}

TEST_CASE("trailing point of the moving ball is pushed at unit speed") {
  const auto& S = by_name("moving_ball");
  const CatchingUpSequence seq = catching_up(S, 0.0, 1.0, 20, Vec{-1.0, 0.0});
  CHECK(seq.length == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < seq.size(); ++i)
    CHECK(seq.points[i][0] == doctest::Approx(seq.times[i] - 1.0).epsilon(1e-12));
}

TEST_CASE("piecewise runs validate the window chain and sum lengths") {
  const auto& S = by_name("shrinking_disk");
  std::vector<Segment> segs(2);
  segs[0] = Segment{0.0, 0.2, 8, Vec{1.0, 0.0}};
  segs[1] = Segment{0.2, 0.4, 8, Vec{0.0, 0.8}};  // spatial restart jump
  const auto runs = piecewise_catching_up(S, segs);
  REQUIRE(runs.size() == 2);
  CHECK(total_length(runs) == doctest::Approx(0.4).epsilon(1e-12));

  segs[1].t0 = 0.25;  // windows no longer abut
  CHECK_THROWS_AS(piecewise_catching_up(S, segs), ProcessError);

  // a single segment reduces to catching_up
  const auto single = piecewise_catching_up(
      S, std::vector<Segment>{Segment{0.0, 0.5, 10, Vec{1.0, 0.0}}});
  CHECK(single[0].length == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("orbit refinement on the catalog") {
  const auto& S = by_name("shrinking_disk");
  const Orbit orbit = refine_to_orbit(S, 0.0, 0.5, Vec{1.0, 0.0}, 1e-6);
  CHECK(orbit.length == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(orbit.residual <= 1e-6);

  const auto& quad = by_name("sublevel_quadratic");
  const Orbit orbit2 =
      refine_to_orbit(quad, -0.25, -0.01, Vec{0.5, 0.0}, 1e-6);
  CHECK(orbit2.length == doctest::Approx(0.4).epsilon(1e-3));

  const auto& grow = by_name("expanding_disk");
  const Orbit orbit3 = refine_to_orbit(grow, 0.0, 1.0, Vec{1.0, 0.0}, 1e-6);
  CHECK(orbit3.length == 0.0);
}

TEST_CASE("velocity law on the quadratic orbit") {
  const auto& quad = by_name("sublevel_quadratic");
  const Orbit orbit =
      discretize_orbit(quad, -0.25, -0.01, 1 << 14, Vec{0.5, 0.0});
  const VelocityStats stats = velocity_check(quad, orbit);
  CHECK(stats.nodes_checked > 1000);
  CHECK(stats.max_deviation <= 5e-3);

  const auto& S = by_name("shrinking_disk");
  const Orbit disk_orbit = discretize_orbit(S, 0.0, 0.5, 4096, Vec{1.0, 0.0});
  const VelocityStats disk_stats = velocity_check(S, disk_orbit);
  CHECK(disk_stats.max_deviation <= 1e-9);

  const auto& grow = by_name("expanding_disk");
  const Orbit grow_orbit = discretize_orbit(grow, 0.0, 1.0, 512, Vec{1.0, 0.0});
  CHECK(velocity_check(grow, grow_orbit).max_deviation == 0.0);
}

TEST_CASE("velocity deviations shrink with the step size") {
  const auto& quad = by_name("sublevel_quadratic");
  double prev = std::numeric_limits<double>::infinity();
  for (int steps : {1 << 10, 1 << 11, 1 << 12, 1 << 13}) {
    const Orbit orbit =
        discretize_orbit(quad, -0.25, -0.04, steps, Vec{0.5, 0.0});
    const double dev = velocity_check(quad, orbit).max_deviation;
    CHECK(dev < prev * 1.05);
    prev = dev;
  }
}

TEST_CASE("sequence lengths approach the refined orbit length monotonically") {
  // off-axis start on the translating ball: the swept point slides along a
  // curved trailing arc, so coarse chains genuinely under-resolve it
  const auto& S = by_name("moving_ball");
  const Vec x0{-0.6, 0.8};
  const Orbit orbit = refine_to_orbit(S, 0.0, 1.5, x0, 1e-6);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (int k = 5; k <= 11; ++k) {
    const CatchingUpSequence seq = catching_up(S, 0.0, 1.5, 1 << k, x0);
    const double gap = std::abs(seq.length - orbit.length);
    CHECK(gap <= prev_gap + 1e-12);
    prev_gap = gap;
  }
}

TEST_CASE("excess estimates on closed-form processes") {
  const auto& S = by_name("shrinking_disk");
  const ExcessEstimate est = excess_estimate(S, 0.0, 0.2, 128);
  CHECK(est.excess == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(est.hausdorff == doctest::Approx(0.2).epsilon(1e-9));

  const auto& grow = by_name("expanding_disk");
  const ExcessEstimate ge = excess_estimate(grow, 0.0, 0.2, 128);
  CHECK(ge.excess == doctest::Approx(0.0));  // inclusion direction

  const auto& drift = by_name("moving_ball");
  const ExcessEstimate de = excess_estimate(drift, 0.0, 0.3, 128);
  CHECK(de.hausdorff == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("excess is controlled by the talweg sup over the window") {
  const auto& quad = by_name("sublevel_quadratic");
  const TalwegTable table = sample_talweg_refined(quad, -0.25, -0.01, 33, 48);
  DeterministicRng rng(23);
  for (int k = 0; k < 10; ++k) {
    const double u = rng.uniform(-0.25, -0.05);
    const double v = u + rng.uniform(0.005, 0.04);
    const ExcessEstimate est = excess_estimate(quad, u, v, 64);
    const double bound = table.max_phi_up(u, v) * (v - u);
    CHECK(est.excess <= bound + 1e-6);
  }
}

TEST_CASE("piecewise catching up tracks the oscillatory negative variation") {
  // a single projection chain only follows the running minimum of the upper
  // edge; collecting the full variation needs a restart at the boundary on
  // every unresolved oscillation, so segments tile at the oscillation scale
  const auto& osc = by_name("oscillatory_interval");
  const double eps_values[] = {0.05, 0.025};
  for (const double eps : eps_values) {
    std::vector<Segment> segs;
    double w0 = eps;
    while (w0 < 0.3) {
      const double w1 = std::min(0.3, 2.0 * w0);
      const double period = std::numbers::pi * w0 * w0 * w0;
      const int n_seg = static_cast<int>(
          std::min(2e5, std::max(8.0, 4.0 * (w1 - w0) / period)));
      for (int j = 0; j < n_seg; ++j) {
        Segment seg;
        seg.t0 = w0 + (w1 - w0) * j / n_seg;
        seg.t1 = w0 + (w1 - w0) * (j + 1) / n_seg;
        seg.steps = 12;
        seg.x0 = Vec{oracle::osc_h(seg.t0)};  // restart at the upper boundary
        segs.push_back(std::move(seg));
      }
      w0 = w1;
    }
    const auto runs = piecewise_catching_up(osc, segs);
    const double total = total_length(runs);
    const double expect = oracle::osc_negative_variation(eps, 0.3);
    CHECK(total <= expect * 1.001);
    CHECK(total >= expect * 0.90);
  }
}

TEST_CASE("orbit refinement reports non-Cauchy lengths when variation piles up") {
  // one-sided chains are monotone (their length telescopes), so divergence
  // needs both edges active: a narrow corridor around the oscillating path
  // drags the point back and forth, and every refinement resolves more
  // wiggles than the tolerance allows
  const auto S = SweepingProcess::interval(
      parse_field("t^2 * (2 + sin(1 / t^2)) - t^2 / 2", 1),
      parse_field("t^2 * (2 + sin(1 / t^2)) + t^2 / 2", 1),
      ProcessDomain{1e-4, 0.4});
  const Vec x0 = project(S, 0.001, Vec{0.0});
  try {
    refine_to_orbit(S, 0.001, 0.3, x0, 1e-4, 64, 1 << 12);
    FAIL("expected a non-Cauchy error");
  } catch (const NonCauchyOrbit& e) {
    CHECK(e.last().length > 0.0);
    CHECK(std::string(e.what()) == "no convergent orbit detected");
  }
}
