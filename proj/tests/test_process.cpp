#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "support/oracles.hpp"
#include "sweep/process.hpp"
#include "sweep/random.hpp"

using namespace sweep;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SweepingProcess shrinking_disk() {
  return SweepingProcess::moving_ball(
      {parse_field("0", 2), parse_field("0", 2)}, parse_field("1 - t", 2),
      ProcessDomain{-kInf, 1.0});
}

SweepingProcess unit_ball_sublevel() {
  // S(t) = {x : |x|^2 <= -t}; at t = -1 the slice is the unit disk
  return SweepingProcess::sublevel(parse_field("x1^2 + x2^2", 2),
                                   ProcessDomain{-kInf, 0.0});
}

SweepingProcess gap_intervals() {
  return SweepingProcess::two_intervals(
      parse_field("-2", 1), parse_field("-t", 1), parse_field("t", 1),
      parse_field("2", 1), ProcessDomain{1e-3, 1.0});
}

}  // namespace

TEST_CASE("membership of the shrinking disk") {
  const auto S = shrinking_disk();
  CHECK(contains(S, 0.5, Vec{0.4, 0.0}));
  CHECK_FALSE(contains(S, 0.5, Vec{0.6, 0.0}));
  CHECK(contains(S, 0.5, Vec{0.5, 0.0}));  // boundary points are members
  CHECK_THROWS_AS(contains(S, 2.0, Vec{0.0, 0.0}), ProcessError);
}

TEST_CASE("closed-form projections") {
  const auto S = shrinking_disk();
  const Vec p = project(S, 0.5, Vec{1.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.0));

  const auto T = gap_intervals();
  const Vec q = project(T, 0.3, Vec{0.0});
  CHECK(q[0] == doctest::Approx(-0.3));  // tie broken lexicographically
}

TEST_CASE("level-set projection against the closed-form ball oracle") {
  const auto S = unit_ball_sublevel();
  const Vec p = project(S, -1.0, Vec{2.0, 0.0});
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(p[1]) < 1e-8);

  DeterministicRng rng(11);
  for (int k = 0; k < 25; ++k) {
    const Vec x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const double r = norm(x);
    const Vec got = project(S, -1.0, x);
    if (r <= 1.0) {
      CHECK(distance(got, x) < 1e-9);
    } else {
      const Vec expect{x[0] / r, x[1] / r};
      CHECK(distance(got, expect) < 1e-7 * (1.0 + r));
    }
  }
}

TEST_CASE("projection invariants") {
  const auto S = unit_ball_sublevel();
  DeterministicRng rng(3);
  for (int k = 0; k < 20; ++k) {
    const double t = rng.uniform(-1.5, -0.2);
    const Vec x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const Vec y = project(S, t, x);
    CHECK(contains(S, t, y));
    const Vec y2 = project(S, t, y);
    CHECK(distance(y, y2) < 1e-9);

    // minimality against boundary sampling
    double best = contains(S, t, x) ? 0.0 : kInf;
    for (const Vec& b : sample_boundary(S, t, 512))
      best = std::min(best, distance(x, b));
    CHECK(distance(x, y) <= best + 1e-6);
  }
}

TEST_CASE("boundary normals of the sublevel kind") {
  const auto S = unit_ball_sublevel();
  const NormalRay ray = boundary_normal(S, -1.0, Vec{1.0, 0.0});
  CHECK_FALSE(ray.zero);
  // generated by (1, grad f) = (1, 2, 0), then normalized
  const double scale = std::sqrt(1.0 + 4.0);
  CHECK(ray.alpha == doctest::Approx(1.0 / scale).epsilon(1e-9));
  CHECK(ray.u[0] == doctest::Approx(2.0 / scale).epsilon(1e-9));
  CHECK(std::abs(ray.u[1]) < 1e-12);

  const auto fd = oracle::fd_jet(parse_field("x1^2 + x2^2", 2), 0.0, {1.0, 0.0});
  CHECK(ray.u[0] / ray.alpha == doctest::Approx(fd.dx[0]).epsilon(1e-7));
}

TEST_CASE("boundary normal of a trailing ball point") {
  const auto S = SweepingProcess::moving_ball(
      {parse_field("t", 2), parse_field("0", 2)}, parse_field("1", 2),
      ProcessDomain{-kInf, kInf});
  const double t = 0.7;
  const NormalRay ray = boundary_normal(S, t, Vec{t - 1.0, 0.0});
  // proportional to (1, -1, 0)
  CHECK(ray.alpha == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(ray.u[0] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("interior points carry the zero marker") {
  const auto S = shrinking_disk();
  const NormalRay ray = boundary_normal(S, 0.0, Vec{0.2, 0.1});
  CHECK(ray.zero);
}

TEST_CASE("boundary sampling") {
  const auto S = shrinking_disk();
  const auto pts = sample_boundary(S, 0.5, 4);
  REQUIRE(pts.size() == 4);
  for (const Vec& p : pts) CHECK(norm(p) == doctest::Approx(0.5).epsilon(1e-12));

  const auto T = SweepingProcess::interval(parse_field("-2", 1),
                                           parse_field("1 + t", 1),
                                           ProcessDomain{-0.5, 5.0});
  const auto ends = sample_boundary(T, 1.0, 2);
  REQUIRE(ends.size() == 2);
  CHECK(ends[0][0] == doctest::Approx(-2.0));
  CHECK(ends[1][0] == doctest::Approx(2.0));

  const auto U = unit_ball_sublevel();
  for (const Vec& p : sample_boundary(U, -1.0, 8)) {
    CHECK(norm(p) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(U.field_value(-1.0, p)) <= 1e-8);
  }
}

TEST_CASE("normal rays are orthogonal to graph tangents on parametrized kinds") {
  // boundary point path x(t) = c(t) + R(t) n has graph tangent (1, x'(t));
  // the stored ray (alpha, u) must annihilate it
  const auto S = SweepingProcess::moving_ball(
      {parse_field("t", 2), parse_field("0", 2)}, parse_field("1 - t", 2),
      ProcessDomain{-kInf, 0.9});
  DeterministicRng rng(17);
  for (int k = 0; k < 100; ++k) {
    const double t = rng.uniform(-1.0, 0.5);
    const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979);
    const double R = 1.0 - t;
    const Vec n{std::cos(angle), std::sin(angle)};
    const Vec x{t + R * n[0], R * n[1]};
    const NormalRay ray = boundary_normal(S, t, x);
    // x'(t) = c'(t) + R'(t) n = (1, 0) - n
    const Vec xdot{1.0 - n[0], -n[1]};
    const double inner = ray.alpha * 1.0 + ray.u[0] * xdot[0] + ray.u[1] * xdot[1];
    CHECK(std::abs(inner) <= 1e-8);
    // spatial part is orthogonal to the slice tangent
    const Vec tangent{-n[1], n[0]};
    CHECK(std::abs(dot(ray.u, tangent)) <= 1e-8);
  }
}

TEST_CASE("continuity diagnostic: smooth processes stay quiet") {
  const auto S = shrinking_disk();
  const auto rep = slice_continuity_diagnostic(S, 0.0, 0.5, 50);
  CHECK(rep.max_ratio == doctest::Approx(1.0).epsilon(0.1));
  CHECK(rep.flagged_times.empty());

  const auto Static = SweepingProcess::moving_ball(
      {parse_field("0", 2), parse_field("0", 2)}, parse_field("1", 2),
      ProcessDomain{-kInf, kInf});
  const auto rep2 = slice_continuity_diagnostic(Static, 0.0, 1.0, 20);
  CHECK(rep2.max_ratio == doctest::Approx(0.0));
}

TEST_CASE("continuity diagnostic flags a merge event") {
  // the same two-interval formulas continued through t = 0 merge into one
  // interval; the boundary multifunction jumps there
  const auto S = SweepingProcess::two_intervals(
      parse_field("-2", 1), parse_field("-t", 1), parse_field("t", 1),
      parse_field("2", 1), ProcessDomain{-0.4, 0.4});
  CHECK(S.has_merge_events());
  const auto rep = slice_continuity_diagnostic(S, -0.1, 0.1, 50);
  CHECK(rep.max_ratio > 1e3);
  CHECK_FALSE(rep.flagged_times.empty());
  for (const double t : rep.flagged_times) CHECK(std::abs(t) < 0.02);
}

TEST_CASE("construction rejects bad processes") {
  CHECK_THROWS_AS(SweepingProcess::interval(parse_field("1", 1),
                                            parse_field("0", 1),
                                            ProcessDomain{0.0, 1.0}),
                  ProcessError);
  CHECK_THROWS_AS(SweepingProcess::moving_ball({parse_field("0", 1)},
                                               parse_field("-1", 1),
                                               ProcessDomain{0.0, 1.0}),
                  ProcessError);
  CHECK_THROWS_AS(SweepingProcess::sublevel(parse_field("x1 + t", 1),
                                            ProcessDomain{0.0, 1.0}),
                  ProcessError);
  // unbounded slice: half-plane
  CHECK_THROWS_AS(SweepingProcess::sublevel(parse_field("x1", 1),
                                            ProcessDomain{-1.0, 0.0}),
                  ProcessError);
}

TEST_CASE("two_intervals ambiguous active piece at a merge") {
  const auto S = SweepingProcess::two_intervals(
      parse_field("-2", 1), parse_field("-t", 1), parse_field("t", 1),
      parse_field("2", 1), ProcessDomain{-0.4, 0.4});
  CHECK_THROWS_WITH_AS(boundary_normal(S, 0.0, Vec{0.0}),
                       doctest::Contains("merge"), ProcessError);
}
