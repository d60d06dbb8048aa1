#pragma once

#include <span>
#include <string>
#include <vector>

#include "sweep/process.hpp"

namespace sweep {

// Discrete projection chain (t_i, x_i) with x_{i+1} the projection of x_i
// onto S(t_{i+1}); length is the sum of step displacements.
struct CatchingUpSequence {
  std::vector<double> times;
  std::vector<Vec> points;
  double length = 0.0;
  bool error_mark = false;  // projection failed mid-run; sequence is partial
  std::string error;

  std::size_t size() const { return times.size(); }
};

// Dense discrete approximation of a sweeping-process orbit together with its
// refinement metadata.
struct Orbit {
  std::vector<double> times;
  std::vector<Vec> points;
  double length = 0.0;
  double final_dt = 0.0;
  double residual = 0.0;  // relative length change at the last refinement
  int steps = 0;
};

class NonCauchyOrbit : public ProcessError {
 public:
  NonCauchyOrbit(const std::string& msg, Orbit last)
      : ProcessError(msg), last_(std::move(last)) {}
  const Orbit& last() const noexcept { return last_; }

 private:
  Orbit last_;
};

CatchingUpSequence catching_up(const SweepingProcess& S, double t0, double t1,
                               int steps, std::span<const double> x0);

struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  int steps = 0;
  Vec x0;
};

// Runs catching_up per segment; windows must abut (end time of each equals
// the start time of the next) while restart points may jump in space. The
// total length counts only within-segment displacements.
std::vector<CatchingUpSequence> piecewise_catching_up(
    const SweepingProcess& S, std::span<const Segment> segments);

double total_length(std::span<const CatchingUpSequence> runs);

// Single-resolution orbit with a residual computed against the half-step run.
Orbit discretize_orbit(const SweepingProcess& S, double t0, double t1,
                       int steps, std::span<const double> x0);

// Doubles the step count from min_steps until the polyline length settles to
// |L_k - L_{k-1}| <= tol * (1 + L_k). Throws NonCauchyOrbit (carrying the
// densest run) when the cap is reached; expected near critical values.
Orbit refine_to_orbit(const SweepingProcess& S, double t0, double t1,
                      std::span<const double> x0, double tol = 1e-4,
                      int min_steps = 64, int max_steps = 1 << 20);

struct VelocityStats {
  double max_deviation = 0.0;
  double mean_deviation = 0.0;
  int nodes_checked = 0;
};

// Compares central-difference node speeds against the asymmetric modulus
// along the orbit.
VelocityStats velocity_check(const SweepingProcess& S, const Orbit& orbit);

struct ExcessEstimate {
  double excess = 0.0;     // ex(S(t0), S(t1)) estimated from samples
  double hausdorff = 0.0;  // max of the two one-sided excesses
};

ExcessEstimate excess_estimate(const SweepingProcess& S, double t0, double t1,
                               int m);

}  // namespace sweep
