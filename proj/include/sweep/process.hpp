#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sweep/field_expr.hpp"
#include "sweep/vec.hpp"

namespace sweep {

class ProcessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when the spatial gradient of the defining field vanishes at an
// active boundary point. The graph normal degenerates to the vertical ray
// (dt, 0); callers that estimate suprema treat this as an infinite modulus.
class ManifoldViolation : public ProcessError {
 public:
  explicit ManifoldViolation(const std::string& msg, double time_component)
      : ProcessError(msg), time_component_(time_component) {}
  double time_component() const noexcept { return time_component_; }

 private:
  double time_component_;
};

class ProjectionError : public ProcessError {
 public:
  ProjectionError(const std::string& msg, double residual)
      : ProcessError(msg), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

struct ProcessDomain {
  double t_min;  // may be -infinity
  double t_max;  // may be +infinity
  bool contains(double t) const { return t >= t_min && t <= t_max; }
};

enum class ProcessKind { sublevel, implicit, moving_ball, interval, two_intervals };

// One generator (alpha, u) of the limiting normal cone of the graph at
// (t, x), stored with unit norm. Interior points carry the zero marker.
struct NormalRay {
  double alpha = 0.0;
  Vec u;
  bool zero = false;

  bool degenerate() const {  // vertical: u = 0 but not the zero marker
    if (zero) return false;
    for (double c : u)
      if (c != 0.0) return false;
    return true;
  }

  static NormalRay zero_marker(int dim) {
    NormalRay r;
    r.zero = true;
    r.u.assign(static_cast<std::size_t>(dim), 0.0);
    return r;
  }
};

struct ContinuityReport {
  std::vector<double> times;      // midpoints of adjacent grid pairs
  std::vector<double> hausdorff;  // estimated dist(H(t_i), H(t_{i+1}))
  std::vector<double> ratio;      // hausdorff / dt
  double max_ratio = 0.0;
  std::vector<double> flagged_times;  // suspected discontinuities
};

// Moving set S(t) in R^n with closed bounded slices. Immutable after
// construction; all operations are pure and safe to call concurrently.
class SweepingProcess {
 public:
  struct SublevelData {
    FieldExpr f;  // S(t) = {x : f(x) <= -t}
  };
  struct ImplicitData {
    FieldExpr g;  // S(t) = {x : g(t,x) <= 0}
  };
  struct BallData {
    std::vector<FieldExpr> center;  // componentwise functions of t
    FieldExpr radius;               // R(t) >= 0
  };
  struct IntervalData {
    FieldExpr lower, upper;  // S(t) = [lower(t), upper(t)]
  };
  struct TwoIntervalsData {
    FieldExpr a1, b1, a2, b2;  // union of [a1,b1] and [a2,b2], b1 < a2
  };

  static SweepingProcess sublevel(FieldExpr f, ProcessDomain domain,
                                  bool smooth_certificate = true);
  static SweepingProcess implicit(FieldExpr g, ProcessDomain domain,
                                  bool smooth_certificate = true);
  static SweepingProcess moving_ball(std::vector<FieldExpr> center,
                                     FieldExpr radius, ProcessDomain domain,
                                     bool smooth_certificate = true);
  static SweepingProcess interval(FieldExpr lower, FieldExpr upper,
                                  ProcessDomain domain,
                                  bool smooth_certificate = true);
  static SweepingProcess two_intervals(FieldExpr a1, FieldExpr b1,
                                       FieldExpr a2, FieldExpr b2,
                                       ProcessDomain domain,
                                       bool smooth_certificate = true);

  ProcessKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  const ProcessDomain& domain() const noexcept { return domain_; }
  bool smooth_certificate() const noexcept { return smooth_certificate_; }
  // true when overlapping two_intervals slices were seen at construction
  bool has_merge_events() const noexcept { return merge_events_; }

  const SublevelData& sublevel_data() const;
  const ImplicitData& implicit_data() const;
  const BallData& ball_data() const;
  const IntervalData& interval_data() const;
  const TwoIntervalsData& two_intervals_data() const;

  // Value (and jet) of the active defining inequality at (t, x); negative
  // inside, zero on the boundary.
  double field_value(double t, std::span<const double> x) const;
  FieldJet field_jet(double t, std::span<const double> x) const;

  void require_time(double t) const;

 private:
  SweepingProcess() = default;
  void validate() const;

  ProcessKind kind_{};
  int dim_ = 0;
  ProcessDomain domain_{};
  bool smooth_certificate_ = true;
  mutable bool merge_events_ = false;
  std::variant<SublevelData, ImplicitData, BallData, IntervalData,
               TwoIntervalsData>
      data_;
};

inline constexpr double kMembershipTol = 1e-10;   // on the defining field
inline constexpr double kBoundaryTol = 1e-8;      // interior/boundary split
inline constexpr double kEscapeRadius = 1e6;      // bounded-slice heuristic
inline constexpr int kProjectionMaxIter = 200;

bool contains(const SweepingProcess& S, double t, std::span<const double> x);

// Nearest point of S(t); ties within the projection tolerance are broken
// lexicographically so runs are reproducible.
Vec project(const SweepingProcess& S, double t, std::span<const double> x);

NormalRay boundary_normal(const SweepingProcess& S, double t,
                          std::span<const double> x);

std::vector<Vec> sample_boundary(const SweepingProcess& S, double t, int m);

// Interior point of the slice with defining field value below -kBoundaryTol,
// if one can be found by coarse search. Used by boundary sampling and the
// excess estimator.
std::optional<Vec> interior_anchor(const SweepingProcess& S, double t);

// Coarse minimizer of the defining field for sublevel/implicit kinds; the
// fallback for slices whose interior is empty (thin slices).
std::optional<std::pair<Vec, double>> coarse_field_minimum(
    const SweepingProcess& S, double t);

ContinuityReport slice_continuity_diagnostic(const SweepingProcess& S,
                                             double a, double b, int grid);

}  // namespace sweep
