#include "sweep/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sweep/parallel.hpp"
#include "sweep/random.hpp"

namespace sweep {

namespace {

constexpr double kThinRadius = 1e-12;

double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// ---------------------------------------------------------------------------
// Small dense linear solve (Gaussian elimination with partial pivoting) for
// the KKT polish. Systems here are (n+1) x (n+1) with tiny n.
// ---------------------------------------------------------------------------
bool solve_linear(std::vector<std::vector<double>>& A, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
    if (std::abs(A[pivot][col]) < 1e-14) return false;
    std::swap(A[pivot], A[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = A[r][col] / A[col][col];
      for (std::size_t c = col; c < n; ++c) A[r][c] -= factor * A[col][c];
      b[r] -= factor * b[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= A[i][c] * b[c];
    b[i] = s / A[i][i];
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

SweepingProcess SweepingProcess::sublevel(FieldExpr f, ProcessDomain domain,
                                          bool smooth_certificate) {
  if (f.uses_time())
    throw ProcessError("sublevel field must not depend on t");
  SweepingProcess s;
  s.kind_ = ProcessKind::sublevel;
  s.dim_ = f.dim();
  s.domain_ = domain;
  s.smooth_certificate_ = smooth_certificate;
  s.data_ = SublevelData{std::move(f)};
  s.validate();
  return s;
}

SweepingProcess SweepingProcess::implicit(FieldExpr g, ProcessDomain domain,
                                          bool smooth_certificate) {
  SweepingProcess s;
  s.kind_ = ProcessKind::implicit;
  s.dim_ = g.dim();
  s.domain_ = domain;
  s.smooth_certificate_ = smooth_certificate;
  s.data_ = ImplicitData{std::move(g)};
  s.validate();
  return s;
}

SweepingProcess SweepingProcess::moving_ball(std::vector<FieldExpr> center,
                                             FieldExpr radius,
                                             ProcessDomain domain,
                                             bool smooth_certificate) {
  if (center.empty()) throw ProcessError("moving_ball needs a center path");
  for (const auto& c : center)
    if (c.uses_coords())
      throw ProcessError("moving_ball center must be a function of t only");
  if (radius.uses_coords())
    throw ProcessError("moving_ball radius must be a function of t only");
  SweepingProcess s;
  s.kind_ = ProcessKind::moving_ball;
  s.dim_ = static_cast<int>(center.size());
  s.domain_ = domain;
  s.smooth_certificate_ = smooth_certificate;
  s.data_ = BallData{std::move(center), std::move(radius)};
  s.validate();
  return s;
}

SweepingProcess SweepingProcess::interval(FieldExpr lower, FieldExpr upper,
                                          ProcessDomain domain,
                                          bool smooth_certificate) {
  if (lower.uses_coords() || upper.uses_coords())
    throw ProcessError("interval endpoints must be functions of t only");
  SweepingProcess s;
  s.kind_ = ProcessKind::interval;
  s.dim_ = 1;
  s.domain_ = domain;
  s.smooth_certificate_ = smooth_certificate;
  s.data_ = IntervalData{std::move(lower), std::move(upper)};
  s.validate();
  return s;
}

SweepingProcess SweepingProcess::two_intervals(FieldExpr a1, FieldExpr b1,
                                               FieldExpr a2, FieldExpr b2,
                                               ProcessDomain domain,
                                               bool smooth_certificate) {
  for (const auto* e : {&a1, &b1, &a2, &b2})
    if (e->uses_coords())
      throw ProcessError("two_intervals endpoints must be functions of t only");
  SweepingProcess s;
  s.kind_ = ProcessKind::two_intervals;
  s.dim_ = 1;
  s.domain_ = domain;
  s.smooth_certificate_ = smooth_certificate;
  s.data_ = TwoIntervalsData{std::move(a1), std::move(b1), std::move(a2),
                             std::move(b2)};
  s.validate();
  return s;
}

const SweepingProcess::SublevelData& SweepingProcess::sublevel_data() const {
  return std::get<SublevelData>(data_);
}
const SweepingProcess::ImplicitData& SweepingProcess::implicit_data() const {
  return std::get<ImplicitData>(data_);
}
const SweepingProcess::BallData& SweepingProcess::ball_data() const {
  return std::get<BallData>(data_);
}
const SweepingProcess::IntervalData& SweepingProcess::interval_data() const {
  return std::get<IntervalData>(data_);
}
const SweepingProcess::TwoIntervalsData& SweepingProcess::two_intervals_data()
    const {
  return std::get<TwoIntervalsData>(data_);
}

void SweepingProcess::require_time(double t) const {
  if (!domain_.contains(t))
    throw ProcessError("time " + std::to_string(t) +
                       " outside the process domain");
}

// ---------------------------------------------------------------------------
// Defining field
// ---------------------------------------------------------------------------

namespace {

// scalar evaluation of a time-only formula
double time_fn(const FieldExpr& e, double t, int dim) {
  const Vec dummy(static_cast<std::size_t>(dim), 0.0);
  return e.value(t, dummy);
}

FieldJet time_fn_jet(const FieldExpr& e, double t, int dim) {
  const Vec dummy(static_cast<std::size_t>(dim), 0.0);
  return e.jet(t, dummy);
}

}  // namespace

double SweepingProcess::field_value(double t, std::span<const double> x) const {
  switch (kind_) {
    case ProcessKind::sublevel:
      return sublevel_data().f.value(t, x) + t;
    case ProcessKind::implicit:
      return implicit_data().g.value(t, x);
    case ProcessKind::moving_ball: {
      const auto& d = ball_data();
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) {
        const double di = x[static_cast<std::size_t>(i)] -
                          time_fn(d.center[static_cast<std::size_t>(i)], t, dim_);
        s += di * di;
      }
      return std::sqrt(s) - time_fn(d.radius, t, dim_);
    }
    case ProcessKind::interval: {
      const auto& d = interval_data();
      const double lo = time_fn(d.lower, t, dim_);
      const double hi = time_fn(d.upper, t, dim_);
      return std::max(lo - x[0], x[0] - hi);
    }
    case ProcessKind::two_intervals: {
      const auto& d = two_intervals_data();
      const double v1 = std::max(time_fn(d.a1, t, dim_) - x[0],
                                 x[0] - time_fn(d.b1, t, dim_));
      const double v2 = std::max(time_fn(d.a2, t, dim_) - x[0],
                                 x[0] - time_fn(d.b2, t, dim_));
      return std::min(v1, v2);
    }
  }
  throw ProcessError("invalid process kind");
}

FieldJet SweepingProcess::field_jet(double t, std::span<const double> x) const {
  switch (kind_) {
    case ProcessKind::sublevel: {
      FieldJet j = sublevel_data().f.jet(t, x);
      j.value += t;
      j.dt += 1.0;
      return j;
    }
    case ProcessKind::implicit:
      return implicit_data().g.jet(t, x);
    case ProcessKind::moving_ball: {
      const auto& d = ball_data();
      Vec diff(static_cast<std::size_t>(dim_));
      Vec cdot(static_cast<std::size_t>(dim_));
      for (int i = 0; i < dim_; ++i) {
        const FieldJet cj =
            time_fn_jet(d.center[static_cast<std::size_t>(i)], t, dim_);
        diff[static_cast<std::size_t>(i)] =
            x[static_cast<std::size_t>(i)] - cj.value;
        cdot[static_cast<std::size_t>(i)] = cj.dt;
      }
      const FieldJet rj = time_fn_jet(d.radius, t, dim_);
      const double nd = norm(diff);
      FieldJet out;
      out.dx.assign(static_cast<std::size_t>(dim_), 0.0);
      if (nd < kThinRadius) {
        out.value = -rj.value;
        out.dt = -rj.dt;
        out.nonsmooth = true;  // distance kink at the center
        return out;
      }
      out.value = nd - rj.value;
      for (int i = 0; i < dim_; ++i)
        out.dx[static_cast<std::size_t>(i)] =
            diff[static_cast<std::size_t>(i)] / nd;
      out.dt = -dot(cdot, out.dx) - rj.dt;
      return out;
    }
    case ProcessKind::interval: {
      const auto& d = interval_data();
      const FieldJet lj = time_fn_jet(d.lower, t, dim_);
      const FieldJet hj = time_fn_jet(d.upper, t, dim_);
      FieldJet out;
      out.dx.assign(1, 0.0);
      const double v_lo = lj.value - x[0];
      const double v_hi = x[0] - hj.value;
      if (v_lo >= v_hi) {
        out.value = v_lo;
        out.dt = lj.dt;
        out.dx[0] = -1.0;
      } else {
        out.value = v_hi;
        out.dt = -hj.dt;
        out.dx[0] = 1.0;
      }
      return out;
    }
    case ProcessKind::two_intervals: {
      const auto& d = two_intervals_data();
      const FieldJet a1 = time_fn_jet(d.a1, t, dim_);
      const FieldJet b1 = time_fn_jet(d.b1, t, dim_);
      const FieldJet a2 = time_fn_jet(d.a2, t, dim_);
      const FieldJet b2 = time_fn_jet(d.b2, t, dim_);
      const double v1 = std::max(a1.value - x[0], x[0] - b1.value);
      const double v2 = std::max(a2.value - x[0], x[0] - b2.value);
      const bool first = v1 <= v2;
      const FieldJet& lo = first ? a1 : a2;
      const FieldJet& hi = first ? b1 : b2;
      FieldJet out;
      out.dx.assign(1, 0.0);
      const double v_lo = lo.value - x[0];
      const double v_hi = x[0] - hi.value;
      if (v_lo >= v_hi) {
        out.value = v_lo;
        out.dt = lo.dt;
        out.dx[0] = -1.0;
      } else {
        out.value = v_hi;
        out.dt = -hi.dt;
        out.dx[0] = 1.0;
      }
      return out;
    }
  }
  throw ProcessError("invalid process kind");
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

bool contains(const SweepingProcess& S, double t, std::span<const double> x) {
  S.require_time(t);
  return S.field_value(t, x) <= kMembershipTol;
}

// ---------------------------------------------------------------------------
// Interior anchor search (coarse scan, then a short descent on the field)
// ---------------------------------------------------------------------------

std::optional<Vec> interior_anchor(const SweepingProcess& S, double t) {
  S.require_time(t);
  const int n = S.dim();

  switch (S.kind()) {
    case ProcessKind::moving_ball: {
      const auto& d = S.ball_data();
      Vec c(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        c[static_cast<std::size_t>(i)] =
            time_fn(d.center[static_cast<std::size_t>(i)], t, n);
      if (time_fn(d.radius, t, n) > kBoundaryTol) return c;
      return std::nullopt;  // thin ball has no interior
    }
    case ProcessKind::interval: {
      const auto& d = S.interval_data();
      const double lo = time_fn(d.lower, t, 1);
      const double hi = time_fn(d.upper, t, 1);
      if (hi - lo > 2.0 * kBoundaryTol) return Vec{0.5 * (lo + hi)};
      return std::nullopt;
    }
    case ProcessKind::two_intervals: {
      const auto& d = S.two_intervals_data();
      const double a1 = time_fn(d.a1, t, 1), b1 = time_fn(d.b1, t, 1);
      const double a2 = time_fn(d.a2, t, 1), b2 = time_fn(d.b2, t, 1);
      if (b1 - a1 > 2.0 * kBoundaryTol) return Vec{0.5 * (a1 + b1)};
      if (b2 - a2 > 2.0 * kBoundaryTol) return Vec{0.5 * (a2 + b2)};
      return std::nullopt;
    }
    default:
      break;
  }

  const auto found = coarse_field_minimum(S, t);
  if (found && found->second < -kBoundaryTol) return found->first;
  return std::nullopt;
}

std::optional<std::pair<Vec, double>> coarse_field_minimum(
    const SweepingProcess& S, double t) {
  S.require_time(t);
  const int n = S.dim();

  Vec best;
  double best_value = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec& p) {
    double v;
    try {
      v = S.field_value(t, p);
    } catch (const EvalError&) {
      return;
    }
    if (v < best_value) {
      best_value = v;
      best = p;
    }
  };

  DeterministicRng rng(0x5eedULL);
  for (double extent : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0, 1024.0}) {
    if (n <= 3) {
      const int side = 9;
      const int total = n == 1 ? side : (n == 2 ? side * side : side * side * side);
      for (int k = 0; k < total; ++k) {
        Vec p(static_cast<std::size_t>(n));
        int rem = k;
        for (int i = 0; i < n; ++i) {
          const int idx = rem % side;
          rem /= side;
          p[static_cast<std::size_t>(i)] =
              -extent + 2.0 * extent * idx / (side - 1);
        }
        consider(p);
      }
    } else {
      for (int k = 0; k < 2048; ++k) {
        Vec p(static_cast<std::size_t>(n));
        for (double& c : p) c = rng.uniform(-extent, extent);
        consider(p);
      }
    }
    if (best_value < -1e-4) break;
  }

  if (best.empty()) return std::nullopt;

  // descend on the field value for a few steps
  Vec y = best;
  for (int iter = 0; iter < 40 && best_value >= -kBoundaryTol; ++iter) {
    FieldJet j;
    try {
      j = S.field_jet(t, y);
    } catch (const EvalError&) {
      break;
    }
    const double gn = norm(j.dx);
    if (gn < 1e-14) break;
    double step = std::max(std::abs(j.value), 1e-3) / (gn * gn);
    bool improved = false;
    for (int bt = 0; bt < 20; ++bt) {
      Vec cand = add_scaled(y, -step, j.dx);
      double v;
      try {
        v = S.field_value(t, cand);
      } catch (const EvalError&) {
        step *= 0.5;
        continue;
      }
      if (v < best_value) {
        y = std::move(cand);
        best_value = v;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return std::make_pair(std::move(y), best_value);
}

// ---------------------------------------------------------------------------
// Boundary hit along a ray (bracket by doubling, bisection, Newton polish)
// ---------------------------------------------------------------------------

namespace {

std::optional<Vec> ray_boundary_hit(const SweepingProcess& S, double t,
                                    const Vec& from, const Vec& dir) {
  double v0;
  try {
    v0 = S.field_value(t, from);
  } catch (const EvalError&) {
    return std::nullopt;
  }
  const double scale = 1.0 + norm(from);
  double r_lo = 0.0, r_hi = 1e-3 * scale;
  bool bracketed = false;
  while (r_hi <= kEscapeRadius) {
    double v;
    try {
      v = S.field_value(t, add_scaled(from, r_hi, dir));
    } catch (const EvalError&) {
      return std::nullopt;
    }
    if ((v0 <= 0.0 && v > 0.0) || (v0 > 0.0 && v <= 0.0)) {
      bracketed = true;
      break;
    }
    r_lo = r_hi;
    r_hi *= 2.0;
  }
  if (!bracketed) return std::nullopt;

  for (int iter = 0; iter < 90; ++iter) {
    const double mid = 0.5 * (r_lo + r_hi);
    double v;
    try {
      v = S.field_value(t, add_scaled(from, mid, dir));
    } catch (const EvalError&) {
      return std::nullopt;
    }
    const bool same_side_as_origin = (v0 <= 0.0) ? (v <= 0.0) : (v > 0.0);
    if (same_side_as_origin)
      r_lo = mid;
    else
      r_hi = mid;
    if (r_hi - r_lo < 1e-10 * scale) break;
  }

  // polish |g| down with Newton steps along the ray
  double r = 0.5 * (r_lo + r_hi);
  Vec p = add_scaled(from, r, dir);
  for (int iter = 0; iter < 3; ++iter) {
    FieldJet j;
    try {
      j = S.field_jet(t, p);
    } catch (const EvalError&) {
      break;
    }
    const double slope = dot(j.dx, dir);
    if (std::abs(slope) < 1e-14) break;
    r -= j.value / slope;
    p = add_scaled(from, r, dir);
  }
  return p;
}

std::vector<Vec> spread_directions(int n, int m) {
  std::vector<Vec> dirs;
  dirs.reserve(static_cast<std::size_t>(m));
  if (n == 1) {
    for (int k = 0; k < m; ++k) dirs.push_back(Vec{k % 2 == 0 ? 1.0 : -1.0});
  } else if (n == 2) {
    for (int k = 0; k < m; ++k) {
      const double a = 2.0 * std::numbers::pi * k / m;
      dirs.push_back(Vec{std::cos(a), std::sin(a)});
    }
  } else if (n == 3) {
    // Fibonacci sphere
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < m; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / m;
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * k;
      dirs.push_back(Vec{rad * std::cos(a), rad * std::sin(a), z});
    }
  } else {
    DeterministicRng rng(0xd1ULL);
    for (int k = 0; k < m; ++k) dirs.push_back(rng.unit_vector(n));
  }
  return dirs;
}

}  // namespace

// ---------------------------------------------------------------------------
// Boundary sampling
// ---------------------------------------------------------------------------

std::vector<Vec> sample_boundary(const SweepingProcess& S, double t, int m) {
  S.require_time(t);
  if (m < 2) throw ProcessError("sample_boundary needs m >= 2");
  const int n = S.dim();

  switch (S.kind()) {
    case ProcessKind::moving_ball: {
      const auto& d = S.ball_data();
      Vec c(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        c[static_cast<std::size_t>(i)] =
            time_fn(d.center[static_cast<std::size_t>(i)], t, n);
      const double R = time_fn(d.radius, t, n);
      if (R <= kThinRadius) return {c, c};
      if (n == 1) return {Vec{c[0] - R}, Vec{c[0] + R}};
      std::vector<Vec> pts;
      pts.reserve(static_cast<std::size_t>(m));
      for (const Vec& dir : spread_directions(n, m))
        pts.push_back(add_scaled(c, R, dir));
      return pts;
    }
    case ProcessKind::interval: {
      const auto& d = S.interval_data();
      return {Vec{time_fn(d.lower, t, 1)}, Vec{time_fn(d.upper, t, 1)}};
    }
    case ProcessKind::two_intervals: {
      const auto& d = S.two_intervals_data();
      const double a1 = time_fn(d.a1, t, 1), b1 = time_fn(d.b1, t, 1);
      const double a2 = time_fn(d.a2, t, 1), b2 = time_fn(d.b2, t, 1);
      if (b1 >= a2)  // merged slice
        return {Vec{std::min(a1, a2)}, Vec{std::max(b1, b2)}};
      return {Vec{a1}, Vec{b1}, Vec{a2}, Vec{b2}};
    }
    default:
      break;
  }

  const auto anchor = interior_anchor(S, t);
  if (!anchor) throw ProcessError("no interior anchor found for boundary sampling");

  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(m));
  int failures = 0;
  for (const Vec& dir : spread_directions(n, m)) {
    auto hit = ray_boundary_hit(S, t, *anchor, dir);
    if (hit && norm(*hit) < kEscapeRadius)
      pts.push_back(std::move(*hit));
    else
      ++failures;
  }
  if (pts.empty())
    throw ProcessError("boundary sampling failed on every direction");
  (void)failures;  // result may have fewer than m points
  return pts;
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

namespace {

Vec project_ball(const SweepingProcess& S, double t, std::span<const double> x) {
  const auto& d = S.ball_data();
  const int n = S.dim();
  Vec c(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    c[static_cast<std::size_t>(i)] =
        time_fn(d.center[static_cast<std::size_t>(i)], t, n);
  const double R = std::max(0.0, time_fn(d.radius, t, n));
  Vec diff = sub(x, c);
  const double nd = norm(diff);
  if (nd <= R) return Vec(x.begin(), x.end());
  if (nd < kThinRadius) return c;
  return add_scaled(c, R / nd, diff);
}

Vec project_interval(const SweepingProcess& S, double t,
                     std::span<const double> x) {
  const auto& d = S.interval_data();
  const double lo = time_fn(d.lower, t, 1);
  const double hi = time_fn(d.upper, t, 1);
  return Vec{clamp(x[0], lo, hi)};
}

Vec project_two_intervals(const SweepingProcess& S, double t,
                          std::span<const double> x) {
  const auto& d = S.two_intervals_data();
  const double a1 = time_fn(d.a1, t, 1), b1 = time_fn(d.b1, t, 1);
  const double a2 = time_fn(d.a2, t, 1), b2 = time_fn(d.b2, t, 1);
  if (b1 >= a2) return Vec{clamp(x[0], std::min(a1, a2), std::max(b1, b2))};
  const double y1 = clamp(x[0], a1, b1);
  const double y2 = clamp(x[0], a2, b2);
  const double d1 = std::abs(x[0] - y1);
  const double d2 = std::abs(x[0] - y2);
  const double tol = 1e-9 * (1.0 + std::abs(x[0]));
  if (std::abs(d1 - d2) <= tol) return Vec{std::min(y1, y2)};
  return d1 < d2 ? Vec{y1} : Vec{y2};
}

// Pull a point onto {g <= 0} by first-order root steps along the gradient.
bool restore_feasibility(const SweepingProcess& S, double t, Vec& y,
                         int max_iter = 60) {
  for (int i = 0; i < max_iter; ++i) {
    FieldJet j;
    try {
      j = S.field_jet(t, y);
    } catch (const EvalError&) {
      return false;
    }
    if (j.value <= 0.0) return true;
    const double g2 = dot(j.dx, j.dx);
    if (g2 < 1e-28) break;  // vanishing gradient: fall through to the check
    for (std::size_t k = 0; k < y.size(); ++k)
      y[k] -= j.value * j.dx[k] / g2;
  }
  try {
    return S.field_value(t, y) <= kMembershipTol;
  } catch (const EvalError&) {
    return false;
  }
}

struct KktResult {
  Vec y;
  double residual = std::numeric_limits<double>::infinity();
};

// Hessian of the defining field by central differences of the exact forward
// gradient (second derivatives are outside the expression contract).
std::vector<std::vector<double>> field_hessian(const SweepingProcess& S,
                                               double t, const Vec& y) {
  const std::size_t n = y.size();
  const double delta = 1e-6 * (1.0 + norm(y));
  std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
  for (std::size_t jcol = 0; jcol < n; ++jcol) {
    Vec yp = y, ym = y;
    yp[jcol] += delta;
    ym[jcol] -= delta;
    const FieldJet jp = S.field_jet(t, yp);
    const FieldJet jm = S.field_jet(t, ym);
    for (std::size_t i = 0; i < n; ++i)
      H[i][jcol] = (jp.dx[i] - jm.dx[i]) / (2.0 * delta);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t jcol = i + 1; jcol < n; ++jcol) {
      const double s = 0.5 * (H[i][jcol] + H[jcol][i]);
      H[i][jcol] = s;
      H[jcol][i] = s;
    }
  return H;
}

KktResult kkt_polish(const SweepingProcess& S, double t,
                     std::span<const double> x, Vec start) {
  const std::size_t n = start.size();
  Vec y = std::move(start);
  FieldJet j = S.field_jet(t, y);
  double lambda = 0.0;
  {
    const double g2 = dot(j.dx, j.dx);
    if (g2 > 1e-28) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (x[i] - y[i]) * j.dx[i];
      lambda = std::max(0.0, s / g2);
    }
  }

  auto residual_of = [&](const Vec& yy, double ll, const FieldJet& jj) {
    double r = jj.value * jj.value;
    for (std::size_t i = 0; i < n; ++i) {
      const double fi = (yy[i] - x[i]) + ll * jj.dx[i];
      r += fi * fi;
    }
    return std::sqrt(r);
  };

  double best_res = residual_of(y, lambda, j);
  Vec best_y = y;
  for (int iter = 0; iter < 12; ++iter) {
    const auto H = field_hessian(S, t, y);
    std::vector<std::vector<double>> A(n + 1, std::vector<double>(n + 1, 0.0));
    std::vector<double> rhs(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < n; ++c) A[i][c] = lambda * H[i][c];
      A[i][i] += 1.0;
      A[i][n] = j.dx[i];
      rhs[i] = -((y[i] - x[i]) + lambda * j.dx[i]);
    }
    for (std::size_t c = 0; c < n; ++c) A[n][c] = j.dx[c];
    rhs[n] = -j.value;
    if (!solve_linear(A, rhs)) break;
    for (std::size_t i = 0; i < n; ++i) y[i] += rhs[i];
    lambda = std::max(0.0, lambda + rhs[n]);
    try {
      j = S.field_jet(t, y);
    } catch (const EvalError&) {
      break;
    }
    const double res = residual_of(y, lambda, j);
    if (res < best_res) {
      best_res = res;
      best_y = y;
    }
    if (res < 1e-13 * (1.0 + norm(x))) break;
  }
  return KktResult{std::move(best_y), best_res};
}

Vec project_level_set(const SweepingProcess& S, double t,
                      std::span<const double> x) {
  const std::size_t n = x.size();
  const double scale = 1.0 + norm(x);
  const double proj_tol = 1e-9 * scale;
  const Vec x_vec(x.begin(), x.end());

  std::vector<Vec> starts;

  // axis-aligned boundary hits from x
  for (std::size_t k = 0; k < n; ++k) {
    for (double sign : {1.0, -1.0}) {
      Vec dir(n, 0.0);
      dir[k] = sign;
      if (auto hit = ray_boundary_hit(S, t, x_vec, dir)) starts.push_back(*hit);
    }
  }
  // x itself, pulled to the feasible set
  {
    Vec y = x_vec;
    if (restore_feasibility(S, t, y)) starts.push_back(std::move(y));
  }
  if (starts.empty()) {
    if (auto anchor = interior_anchor(S, t)) {
      Vec dir = sub(x, *anchor);
      const double dn = norm(dir);
      if (dn > 1e-14) {
        scale_in_place(dir, 1.0 / dn);
        if (auto hit = ray_boundary_hit(S, t, *anchor, dir))
          starts.push_back(*hit);
      } else {
        starts.push_back(*anchor);
      }
    }
  }
  if (starts.empty())
    throw ProjectionError("projection found no feasible start (empty slice?)",
                          std::numeric_limits<double>::infinity());

  Vec best;
  double best_dist = std::numeric_limits<double>::infinity();
  double best_residual = std::numeric_limits<double>::infinity();

  for (Vec& start : starts) {
    // projected-gradient descent on |x - y|^2 over {g <= 0}
    Vec y = std::move(start);
    for (int iter = 0; iter < kProjectionMaxIter; ++iter) {
      Vec cand(n);
      for (std::size_t i = 0; i < n; ++i) cand[i] = y[i] + 0.5 * (x[i] - y[i]);
      if (!restore_feasibility(S, t, cand, 40)) break;
      const double moved = distance(cand, y);
      y = std::move(cand);
      if (moved < 1e-12 * scale) break;
    }
    KktResult polished = kkt_polish(S, t, x, y);
    Vec& candidate = polished.residual < 1e-6 * scale ? polished.y : y;
    double fv;
    try {
      fv = S.field_value(t, candidate);
    } catch (const EvalError&) {
      continue;
    }
    if (fv > kMembershipTol) {
      Vec fixed = candidate;
      if (!restore_feasibility(S, t, fixed)) continue;
      candidate = fixed;
    }
    const double dist = distance(x, candidate);
    if (dist < best_dist - proj_tol) {
      best_dist = dist;
      best = candidate;
      best_residual = polished.residual;
    } else if (dist <= best_dist + proj_tol && lex_less(candidate, best)) {
      best = candidate;
      best_residual = std::min(best_residual, polished.residual);
    }
  }

  if (best.empty())
    throw ProjectionError("projection did not converge",
                          best_residual);
  return best;
}

}  // namespace

Vec project(const SweepingProcess& S, double t, std::span<const double> x) {
  S.require_time(t);
  if (static_cast<int>(x.size()) != S.dim())
    throw ProcessError("point dimension mismatch in project");
  switch (S.kind()) {
    case ProcessKind::moving_ball:
      return project_ball(S, t, x);
    case ProcessKind::interval:
      return project_interval(S, t, x);
    case ProcessKind::two_intervals:
      return project_two_intervals(S, t, x);
    case ProcessKind::sublevel:
    case ProcessKind::implicit: {
      if (S.field_value(t, x) <= kMembershipTol)
        return Vec(x.begin(), x.end());
      return project_level_set(S, t, x);
    }
  }
  throw ProcessError("invalid process kind");
}

// ---------------------------------------------------------------------------
// Boundary normal
// ---------------------------------------------------------------------------

NormalRay boundary_normal(const SweepingProcess& S, double t,
                          std::span<const double> x) {
  if (!contains(S, t, x))
    throw ProcessError("boundary_normal: point is not a member of the slice");
  const int n = S.dim();

  const double v = S.field_value(t, x);
  if (v < -kBoundaryTol) return NormalRay::zero_marker(n);

  if (S.kind() == ProcessKind::moving_ball) {
    const auto& d = S.ball_data();
    const double R = time_fn(d.radius, t, n);
    Vec c(static_cast<std::size_t>(n));
    Vec cdot(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const FieldJet cj =
          time_fn_jet(d.center[static_cast<std::size_t>(i)], t, n);
      c[static_cast<std::size_t>(i)] = cj.value;
      cdot[static_cast<std::size_t>(i)] = cj.dt;
    }
    Vec diff = sub(x, c);
    if (R <= kBoundaryTol && norm(diff) <= kBoundaryTol) {
      // thin slice: the normal space is a hyperplane; return the generator
      // that realizes the supremum of the moduli.
      const double speed = norm(cdot);
      NormalRay ray;
      if (speed < 1e-14) {
        ray.alpha = 0.0;
        ray.u.assign(static_cast<std::size_t>(n), 0.0);
        ray.u[0] = 1.0;
        return ray;
      }
      ray.alpha = speed;
      ray.u = cdot;
      scale_in_place(ray.u, -1.0 / speed);
      const double nn = std::sqrt(ray.alpha * ray.alpha + 1.0);
      ray.alpha /= nn;
      scale_in_place(ray.u, 1.0 / nn);
      return ray;
    }
  }

  if (S.kind() == ProcessKind::two_intervals) {
    const auto& d = S.two_intervals_data();
    const double b1 = time_fn(d.b1, t, 1);
    const double a2 = time_fn(d.a2, t, 1);
    if (std::abs(x[0] - b1) <= kBoundaryTol &&
        std::abs(x[0] - a2) <= kBoundaryTol)
      throw ProcessError(
          "ambiguous active piece for two_intervals at a merge event");
  }

  const FieldJet j = S.field_jet(t, x);
  const double gn = norm(j.dx);
  if (gn < 1e-12)
    throw ManifoldViolation(
        "vanishing spatial gradient at an active boundary point", j.dt);

  NormalRay ray;
  ray.alpha = j.dt;
  ray.u = j.dx;
  const double nn = std::sqrt(ray.alpha * ray.alpha + gn * gn);
  ray.alpha /= nn;
  scale_in_place(ray.u, 1.0 / nn);
  return ray;
}

// ---------------------------------------------------------------------------
// Slice continuity diagnostic (Pompeiu-Hausdorff ratios between boundary
// samples on a grid)
// ---------------------------------------------------------------------------

namespace {

double sampled_set_distance(const std::vector<Vec>& A,
                            const std::vector<Vec>& B) {
  auto one_sided = [](const std::vector<Vec>& P, const std::vector<Vec>& Q) {
    double worst = 0.0;
    for (const Vec& p : P) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const Vec& q : Q) nearest = std::min(nearest, distance(p, q));
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(one_sided(A, B), one_sided(B, A));
}

}  // namespace

ContinuityReport slice_continuity_diagnostic(const SweepingProcess& S,
                                             double a, double b, int grid) {
  S.require_time(a);
  S.require_time(b);
  if (grid < 2) throw ProcessError("continuity diagnostic needs grid >= 2");
  const int m = S.dim() >= 2 ? 48 : 8;

  std::vector<double> ts(static_cast<std::size_t>(grid) + 1);
  for (int i = 0; i <= grid; ++i)
    ts[static_cast<std::size_t>(i)] = a + (b - a) * i / grid;

  std::vector<std::vector<Vec>> samples(ts.size());
  par_for(ts.size(), [&](std::size_t i) {
    try {
      samples[i] = sample_boundary(S, ts[i], m);
    } catch (const ProcessError&) {
      samples[i].clear();
    } catch (const EvalError&) {
      samples[i].clear();
    }
  });

  ContinuityReport report;
  const double dt = (b - a) / grid;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (samples[i].empty() || samples[i + 1].empty()) continue;
    const double h = sampled_set_distance(samples[i], samples[i + 1]);
    const double ratio = h / dt;
    report.times.push_back(0.5 * (ts[i] + ts[i + 1]));
    report.hausdorff.push_back(h);
    report.ratio.push_back(ratio);
    report.max_ratio = std::max(report.max_ratio, ratio);

    // A jump keeps its Hausdorff gap while the cell shrinks, so the ratio
    // doubles per halving; refine suspicious cells to separate jumps from
    // fast-but-continuous motion.
    if (ratio > 125.0) {
      double lo = ts[i], hi = ts[i + 1];
      std::vector<Vec> lo_s = samples[i], hi_s = samples[i + 1];
      double worst = ratio;
      bool flagged = false;
      try {
        for (int round = 0; round < 3; ++round) {
          const double mid = 0.5 * (lo + hi);
          const auto mid_s = sample_boundary(S, mid, m);
          const double h1 = sampled_set_distance(lo_s, mid_s);
          const double h2 = sampled_set_distance(mid_s, hi_s);
          const double half = 0.5 * (hi - lo);
          if (h1 >= h2) {
            hi = mid;
            hi_s = mid_s;
            worst = h1 / half;
          } else {
            lo = mid;
            lo_s = mid_s;
            worst = h2 / half;
          }
          if (worst > 1e3) {
            flagged = true;
            break;
          }
        }
      } catch (const ProcessError&) {
        flagged = true;
      }
      report.max_ratio = std::max(report.max_ratio, worst);
      if (flagged) report.flagged_times.push_back(0.5 * (lo + hi));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Construction-time validation (sampled, not proved)
// ---------------------------------------------------------------------------

void SweepingProcess::validate() const {
  if (!(domain_.t_min < domain_.t_max))
    throw ProcessError("process domain must satisfy t_min < t_max");

  const double lo = std::isfinite(domain_.t_min)
                        ? domain_.t_min
                        : (std::isfinite(domain_.t_max) ? domain_.t_max - 2.0
                                                        : -1.0);
  const double hi = std::isfinite(domain_.t_max)
                        ? domain_.t_max
                        : (std::isfinite(domain_.t_min) ? domain_.t_min + 2.0
                                                        : 1.0);

  for (int i = 0; i < 7; ++i) {
    const double t = lo + (hi - lo) * (i + 0.5) / 7.0;
    switch (kind_) {
      case ProcessKind::moving_ball: {
        const auto& d = ball_data();
        const double R = time_fn(d.radius, t, dim_);
        if (R < -kMembershipTol)
          throw ProcessError("moving_ball has empty slice (negative radius)");
        if (!std::isfinite(R) || R > kEscapeRadius)
          throw ProcessError("moving_ball slice unbounded at sampled time");
        break;
      }
      case ProcessKind::interval: {
        const auto& d = interval_data();
        const double l = time_fn(d.lower, t, 1);
        const double h = time_fn(d.upper, t, 1);
        if (!(l < h))
          throw ProcessError("interval slice empty or degenerate at sampled time");
        if (h - l > kEscapeRadius)
          throw ProcessError("interval slice unbounded at sampled time");
        break;
      }
      case ProcessKind::two_intervals: {
        const auto& d = two_intervals_data();
        const double a1 = time_fn(d.a1, t, 1), b1 = time_fn(d.b1, t, 1);
        const double a2 = time_fn(d.a2, t, 1), b2 = time_fn(d.b2, t, 1);
        if (!(a1 <= b1) || !(a2 <= b2))
          throw ProcessError("two_intervals piece empty at sampled time");
        if (b1 >= a2) merge_events_ = true;
        if (std::max(b1, b2) - std::min(a1, a2) > kEscapeRadius)
          throw ProcessError("two_intervals slice unbounded at sampled time");
        break;
      }
      case ProcessKind::sublevel:
      case ProcessKind::implicit: {
        std::optional<Vec> anchor;
        try {
          anchor = interior_anchor(*this, t);
        } catch (const EvalError&) {
          anchor = std::nullopt;
        }
        if (!anchor) break;  // thin or hard-to-anchor slices are tolerated
        for (const Vec& dir : spread_directions(dim_, std::min(2 * dim_, 8))) {
          auto hit = ray_boundary_hit(*this, t, *anchor, dir);
          if (!hit)
            throw ProcessError("slice appears unbounded at sampled time " +
                               std::to_string(t));
          const FieldJet j = field_jet(t, *hit);
          if (norm(j.dx) < 1e-12)
            throw ProcessError(
                "vanishing spatial gradient on sampled boundary "
                "(manifold condition violated)");
        }
        break;
      }
    }
  }
}

}  // namespace sweep
