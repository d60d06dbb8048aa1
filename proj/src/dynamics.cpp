#include "sweep/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sweep/coderivative.hpp"
#include "sweep/parallel.hpp"

namespace sweep {

CatchingUpSequence catching_up(const SweepingProcess& S, double t0, double t1,
                               int steps, std::span<const double> x0) {
  S.require_time(t0);
  S.require_time(t1);
  if (steps < 1) throw ProcessError("catching_up needs steps >= 1");
  if (!(t0 < t1)) throw ProcessError("catching_up needs t0 < t1");
  if (!contains(S, t0, x0))
    throw ProcessError("catching_up start point is not a member of S(t0)");

  CatchingUpSequence seq;
  seq.times.reserve(static_cast<std::size_t>(steps) + 1);
  seq.points.reserve(static_cast<std::size_t>(steps) + 1);
  seq.times.push_back(t0);
  seq.points.emplace_back(x0.begin(), x0.end());

  for (int i = 1; i <= steps; ++i) {
    const double t = t0 + (t1 - t0) * i / steps;
    try {
      Vec next = project(S, t, seq.points.back());
      seq.length += distance(next, seq.points.back());
      seq.times.push_back(t);
      seq.points.push_back(std::move(next));
    } catch (const ProcessError& e) {
      seq.error_mark = true;
      seq.error = e.what();
      break;
    }
  }
  return seq;
}

std::vector<CatchingUpSequence> piecewise_catching_up(
    const SweepingProcess& S, std::span<const Segment> segments) {
  if (segments.empty())
    throw ProcessError("piecewise_catching_up needs at least one segment");
  for (std::size_t j = 0; j + 1 < segments.size(); ++j) {
    if (segments[j].t1 != segments[j + 1].t0)
      throw ProcessError(
          "piecewise segments must abut: end time of each segment must equal "
          "the start time of the next");
  }
  std::vector<CatchingUpSequence> runs;
  runs.reserve(segments.size());
  for (const Segment& seg : segments)
    runs.push_back(catching_up(S, seg.t0, seg.t1, seg.steps, seg.x0));
  return runs;
}

double total_length(std::span<const CatchingUpSequence> runs) {
  double acc = 0.0;
  for (const auto& r : runs) acc += r.length;
  return acc;
}

Orbit discretize_orbit(const SweepingProcess& S, double t0, double t1,
                       int steps, std::span<const double> x0) {
  const CatchingUpSequence coarse =
      catching_up(S, t0, t1, std::max(1, steps / 2), x0);
  const CatchingUpSequence fine = catching_up(S, t0, t1, steps, x0);
  if (coarse.error_mark || fine.error_mark)
    throw ProcessError("orbit discretization failed: " +
                       (fine.error_mark ? fine.error : coarse.error));
  Orbit orbit;
  orbit.times = fine.times;
  orbit.points = fine.points;
  orbit.length = fine.length;
  orbit.steps = steps;
  orbit.final_dt = (t1 - t0) / steps;
  orbit.residual =
      std::abs(fine.length - coarse.length) / (1.0 + fine.length);
  return orbit;
}

Orbit refine_to_orbit(const SweepingProcess& S, double t0, double t1,
                      std::span<const double> x0, double tol, int min_steps,
                      int max_steps) {
  if (tol <= 0.0) throw ProcessError("refine_to_orbit needs tol > 0");
  double prev_length = std::numeric_limits<double>::quiet_NaN();
  Orbit last;
  for (int steps = min_steps; steps <= max_steps; steps *= 2) {
    const CatchingUpSequence run = catching_up(S, t0, t1, steps, x0);
    if (run.error_mark)
      throw ProcessError("orbit refinement failed: " + run.error);
    last.times = run.times;
    last.points = run.points;
    last.length = run.length;
    last.steps = steps;
    last.final_dt = (t1 - t0) / steps;
    if (!std::isnan(prev_length)) {
      last.residual =
          std::abs(run.length - prev_length) / (1.0 + run.length);
      if (last.residual <= tol) return last;
    }
    prev_length = run.length;
  }
  throw NonCauchyOrbit("no convergent orbit detected", std::move(last));
}

VelocityStats velocity_check(const SweepingProcess& S, const Orbit& orbit) {
  VelocityStats stats;
  if (orbit.times.size() < 3) return stats;
  double sum = 0.0;
  for (std::size_t i = 1; i + 1 < orbit.times.size(); ++i) {
    const double dt = orbit.times[i + 1] - orbit.times[i - 1];
    const double speed =
        distance(orbit.points[i + 1], orbit.points[i - 1]) / dt;
    // the velocity law holds where the orbit is differentiable; a central
    // difference straddling an attachment kink compares one-sided speeds of
    // different branches, so such nodes are excluded
    const double fwd = distance(orbit.points[i + 1], orbit.points[i]) /
                       (orbit.times[i + 1] - orbit.times[i]);
    const double bwd = distance(orbit.points[i], orbit.points[i - 1]) /
                       (orbit.times[i] - orbit.times[i - 1]);
    if (std::abs(fwd - bwd) > 0.2 * std::max(fwd, bwd) + 1e-9) continue;
    const ModulusPair mp = modulus_at(S, orbit.times[i], orbit.points[i]);
    if (mp.asym.critical) continue;
    const double dev = std::abs(speed - mp.asym.value);
    stats.max_deviation = std::max(stats.max_deviation, dev);
    sum += dev;
    ++stats.nodes_checked;
  }
  if (stats.nodes_checked > 0) stats.mean_deviation = sum / stats.nodes_checked;
  return stats;
}

ExcessEstimate excess_estimate(const SweepingProcess& S, double t0, double t1,
                               int m) {
  S.require_time(t0);
  S.require_time(t1);
  if (m < 2) throw ProcessError("excess_estimate needs m >= 2");

  auto one_sided = [&](double from, double to) {
    std::vector<Vec> samples = sample_boundary(S, from, std::max(2, m / 2));
    if (const auto anchor = interior_anchor(S, from)) {
      const std::size_t boundary_count = samples.size();
      const double depths[] = {0.25, 0.5, 0.75};
      std::size_t d = 0;
      for (std::size_t i = 0;
           i < boundary_count && samples.size() < static_cast<std::size_t>(m);
           ++i, ++d) {
        const double s = depths[d % 3];
        Vec interior(anchor->size());
        for (std::size_t k = 0; k < interior.size(); ++k)
          interior[k] = (*anchor)[k] + s * (samples[i][k] - (*anchor)[k]);
        // disconnected slices: the chord to the anchor may leave the set
        if (contains(S, from, interior)) samples.push_back(std::move(interior));
      }
    }
    std::vector<double> dist(samples.size(), 0.0);
    std::vector<char> failed(samples.size(), 0);
    par_for(samples.size(), [&](std::size_t i) {
      try {
        dist[i] = distance(samples[i], project(S, to, samples[i]));
      } catch (const ProcessError&) {
        failed[i] = 1;
      } catch (const EvalError&) {
        failed[i] = 1;
      }
    });
    double worst = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (failed[i])
        throw ProcessError("excess sampling failed at a sample point");
      worst = std::max(worst, dist[i]);
    }
    return worst;
  };

  ExcessEstimate est;
  est.excess = one_sided(t0, t1);
  est.hausdorff = std::max(est.excess, one_sided(t1, t0));
  return est;
}

}  // namespace sweep
