#include "sweep/talweg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "sweep/parallel.hpp"

namespace sweep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kClusterLevels = 30;

struct ScoredPoint {
  double asym = -1.0;
  double sym = -1.0;
  Vec point;
  bool critical = false;
};

ScoredPoint score_point(const SweepingProcess& S, double t, const Vec& x) {
  ScoredPoint sp;
  sp.point = x;
  const ModulusPair mp = modulus_at(S, t, x);
  sp.asym = mp.asym.value;
  sp.sym = mp.sym.value;
  sp.critical = mp.asym.critical || mp.sym.critical;
  return sp;
}

// Golden-section maximization of a scalar function on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double* best_arg) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 48; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = f(x1);
    }
    if (hi - lo < 1e-12) break;
  }
  const double arg = f1 > f2 ? x1 : x2;
  if (best_arg) *best_arg = arg;
  return std::max(f1, f2);
}

}  // namespace

// ---------------------------------------------------------------------------
// talweg_at
// ---------------------------------------------------------------------------

namespace {

// Argmax bookkeeping with a tie-break on the symmetric modulus: when the
// oriented modulus vanishes everywhere, the restart policies still want the
// boundary point that is actually moving.
struct ArgmaxTracker {
  double best_asym = -1.0;
  double best_sym = -1.0;
  void offer(const ScoredPoint& sp, TalwegPoint& out) {
    if (sp.critical) out.critical = true;
    if (sp.asym > best_asym ||
        (sp.asym == best_asym && sp.sym > best_sym)) {
      best_asym = sp.asym;
      best_sym = sp.sym;
      out.phi_up = sp.asym;
      out.argmax = sp.point;
    }
    out.phi_sym = std::max(out.phi_sym, sp.sym);
  }
};

TalwegPoint finite_boundary_talweg(const SweepingProcess& S, double t,
                                   const std::vector<Vec>& pts) {
  TalwegPoint out;
  out.phi_up = -1.0;
  out.phi_sym = -1.0;
  ArgmaxTracker tracker;
  for (const Vec& p : pts) tracker.offer(score_point(S, t, p), out);
  out.phi_sym = std::max(out.phi_sym, out.phi_up);
  return out;
}

// Local ascent over an angle parametrization of the boundary (2-d kinds).
void ascend_angle(const SweepingProcess& S, double t,
                  const std::function<std::optional<Vec>(double)>& at_angle,
                  double bracket, std::vector<double> seeds, TalwegPoint& out) {
  auto asym_of = [&](double a) {
    const auto p = at_angle(a);
    if (!p) return -1.0;
    return modulus_at(S, t, *p).asym.value;
  };
  auto sym_of = [&](double a) {
    const auto p = at_angle(a);
    if (!p) return -1.0;
    return modulus_at(S, t, *p).sym.value;
  };
  bool first = true;
  for (const double seed : seeds) {
    double arg = seed;
    const double up = golden_max(asym_of, seed - bracket, seed + bracket, &arg);
    if (up > out.phi_up) {
      if (const auto p = at_angle(arg)) {
        out.phi_up = up;
        out.argmax = *p;
      }
    }
    if (first) {
      const double sym =
          golden_max(sym_of, seed - bracket, seed + bracket, nullptr);
      out.phi_sym = std::max(out.phi_sym, sym);
      first = false;
    }
  }
  out.phi_sym = std::max(out.phi_sym, out.phi_up);
}

// Direction ascent for dimensions above two: pattern search over the unit
// sphere of boundary directions.
void ascend_direction(const SweepingProcess& S, double t,
                      const std::function<std::optional<Vec>(const Vec&)>& hit,
                      std::vector<Vec> seeds, double initial_step,
                      TalwegPoint& out) {
  auto asym_of = [&](const Vec& dir) {
    const auto p = hit(dir);
    if (!p) return -1.0;
    return modulus_at(S, t, *p).asym.value;
  };
  const int n = S.dim();
  for (Vec dir : seeds) {
    double step = initial_step;
    double current = asym_of(dir);
    for (int iter = 0; iter < 40 && step > 1e-10; ++iter) {
      bool improved = false;
      for (int axis = 0; axis < n && !improved; ++axis) {
        for (double sign : {1.0, -1.0}) {
          Vec cand = dir;
          cand[static_cast<std::size_t>(axis)] += sign * step;
          const double nn = norm(cand);
          if (nn < 1e-12) continue;
          scale_in_place(cand, 1.0 / nn);
          const double v = asym_of(cand);
          if (v > current) {
            current = v;
            dir = cand;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (current > out.phi_up) {
      if (const auto p = hit(dir)) {
        out.phi_up = current;
        out.argmax = *p;
        out.phi_sym = std::max(out.phi_sym,
                               modulus_at(S, t, *p).sym.value);
      }
    }
  }
  out.phi_sym = std::max(out.phi_sym, out.phi_up);
}

}  // namespace

TalwegPoint talweg_at(const SweepingProcess& S, double t, int m) {
  S.require_time(t);
  m = std::max(m, 8);
  const int n = S.dim();

  // 1-d kinds and thin balls have finitely many boundary points.
  if (S.kind() == ProcessKind::interval ||
      S.kind() == ProcessKind::two_intervals || n == 1)
    return finite_boundary_talweg(S, t, sample_boundary(S, t, m));

  if (S.kind() == ProcessKind::moving_ball) {
    const auto& d = S.ball_data();
    Vec c(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const Vec dummy(static_cast<std::size_t>(n), 0.0);
      c[static_cast<std::size_t>(i)] =
          d.center[static_cast<std::size_t>(i)].value(t, dummy);
    }
    const Vec dummy(static_cast<std::size_t>(n), 0.0);
    const double R = d.radius.value(t, dummy);
    if (R <= kBoundaryTol)
      return finite_boundary_talweg(S, t, {c});

    if (n == 2) {
      auto at_angle = [&](double a) -> std::optional<Vec> {
        return Vec{c[0] + R * std::cos(a), c[1] + R * std::sin(a)};
      };
      TalwegPoint out;
      out.phi_up = -1.0;
      out.phi_sym = -1.0;
      ArgmaxTracker tracker;
      std::vector<std::pair<double, double>> scored;  // (asym, angle)
      for (int k = 0; k < m; ++k) {
        const double a = 2.0 * std::numbers::pi * k / m;
        const ScoredPoint sp = score_point(S, t, *at_angle(a));
        tracker.offer(sp, out);
        scored.emplace_back(sp.asym, a);
      }
      if (out.critical) return out;
      std::sort(scored.begin(), scored.end(),
                [](auto& x, auto& y) { return x.first > y.first; });
      std::vector<double> seeds;
      for (std::size_t i = 0; i < scored.size() && i < 3; ++i)
        seeds.push_back(scored[i].second);
      ascend_angle(S, t, at_angle, 2.0 * std::numbers::pi / m, seeds, out);
      return out;
    }

    auto hit = [&](const Vec& dir) -> std::optional<Vec> {
      return add_scaled(c, R, dir);
    };
    TalwegPoint out;
    out.phi_up = -1.0;
    out.phi_sym = -1.0;
    ArgmaxTracker tracker;
    std::vector<std::pair<double, Vec>> scored;
    const auto pts = sample_boundary(S, t, m);
    for (const Vec& p : pts) {
      const ScoredPoint sp = score_point(S, t, p);
      tracker.offer(sp, out);
      Vec dir = sub(p, c);
      const double nn = norm(dir);
      if (nn > 1e-12) {
        scale_in_place(dir, 1.0 / nn);
        scored.emplace_back(sp.asym, std::move(dir));
      }
    }
    if (out.critical) return out;
    std::sort(scored.begin(), scored.end(),
              [](auto& x, auto& y) { return x.first > y.first; });
    std::vector<Vec> seeds;
    for (std::size_t i = 0; i < scored.size() && i < 3; ++i)
      seeds.push_back(scored[i].second);
    ascend_direction(S, t, hit, std::move(seeds), 2.0 / std::sqrt(double(m)),
                     out);
    return out;
  }

  // sublevel / implicit
  const auto anchor = interior_anchor(S, t);
  if (!anchor) {
    // thin slice: score the coarse minimizer (vertical normal -> critical)
    const auto fm = coarse_field_minimum(S, t);
    if (fm && fm->second <= kMembershipTol)
      return finite_boundary_talweg(S, t, {fm->first});
    throw ProcessError("talweg_at: slice appears empty at t = " +
                       std::to_string(t));
  }

  const auto pts = sample_boundary(S, t, m);
  TalwegPoint out;
  out.phi_up = -1.0;
  out.phi_sym = -1.0;

  if (n == 2) {
    auto at_angle = [&](double a) -> std::optional<Vec> {
      Vec dir{std::cos(a), std::sin(a)};
      // reuse the generic ray machinery through project-by-ray
      return [&]() -> std::optional<Vec> {
        // local bisection identical to boundary sampling
        const Vec& from = *anchor;
        double v0 = S.field_value(t, from);
        if (v0 > 0.0) return std::nullopt;
        double r_lo = 0.0, r_hi = 1e-3 * (1.0 + norm(from));
        bool bracketed = false;
        while (r_hi <= kEscapeRadius) {
          const double v = S.field_value(t, add_scaled(from, r_hi, dir));
          if (v > 0.0) {
            bracketed = true;
            break;
          }
          r_lo = r_hi;
          r_hi *= 2.0;
        }
        if (!bracketed) return std::nullopt;
        for (int i = 0; i < 80; ++i) {
          const double mid = 0.5 * (r_lo + r_hi);
          if (S.field_value(t, add_scaled(from, mid, dir)) <= 0.0)
            r_lo = mid;
          else
            r_hi = mid;
        }
        double r = 0.5 * (r_lo + r_hi);
        Vec p = add_scaled(from, r, dir);
        for (int i = 0; i < 3; ++i) {
          const FieldJet j = S.field_jet(t, p);
          const double slope = dot(j.dx, dir);
          if (std::abs(slope) < 1e-14) break;
          r -= j.value / slope;
          p = add_scaled(from, r, dir);
        }
        return p;
      }();
    };

    ArgmaxTracker tracker;
    std::vector<std::pair<double, double>> scored;
    for (const Vec& p : pts) {
      const ScoredPoint sp = score_point(S, t, p);
      tracker.offer(sp, out);
      const double a = std::atan2(p[1] - (*anchor)[1], p[0] - (*anchor)[0]);
      scored.emplace_back(sp.asym, a);
    }
    if (out.critical) return out;
    std::sort(scored.begin(), scored.end(),
              [](auto& x, auto& y) { return x.first > y.first; });
    std::vector<double> seeds;
    for (std::size_t i = 0; i < scored.size() && i < 3; ++i)
      seeds.push_back(scored[i].second);
    ascend_angle(S, t, at_angle, 2.0 * std::numbers::pi / m, seeds, out);
    return out;
  }

  // n >= 3: direction ascent from the anchor
  auto hit = [&](const Vec& dir) -> std::optional<Vec> {
    const Vec& from = *anchor;
    double v0 = S.field_value(t, from);
    if (v0 > 0.0) return std::nullopt;
    double r_lo = 0.0, r_hi = 1e-3 * (1.0 + norm(from));
    bool bracketed = false;
    while (r_hi <= kEscapeRadius) {
      const double v = S.field_value(t, add_scaled(from, r_hi, dir));
      if (v > 0.0) {
        bracketed = true;
        break;
      }
      r_lo = r_hi;
      r_hi *= 2.0;
    }
    if (!bracketed) return std::nullopt;
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (r_lo + r_hi);
      if (S.field_value(t, add_scaled(from, mid, dir)) <= 0.0)
        r_lo = mid;
      else
        r_hi = mid;
    }
    return add_scaled(from, 0.5 * (r_lo + r_hi), dir);
  };

  ArgmaxTracker tracker;
  std::vector<std::pair<double, Vec>> scored;
  for (const Vec& p : pts) {
    const ScoredPoint sp = score_point(S, t, p);
    tracker.offer(sp, out);
    Vec dir = sub(p, *anchor);
    const double nn = norm(dir);
    if (nn > 1e-12) {
      scale_in_place(dir, 1.0 / nn);
      scored.emplace_back(sp.asym, std::move(dir));
    }
  }
  if (out.critical) return out;
  std::sort(scored.begin(), scored.end(),
            [](auto& x, auto& y) { return x.first > y.first; });
  std::vector<Vec> seeds;
  for (std::size_t i = 0; i < scored.size() && i < 3; ++i)
    seeds.push_back(scored[i].second);
  ascend_direction(S, t, hit, std::move(seeds), 0.5, out);
  return out;
}

// ---------------------------------------------------------------------------
// Table sampling
// ---------------------------------------------------------------------------

namespace {

struct NodeResult {
  TalwegPoint point;
  bool failed = false;
  std::string error;
};

NodeResult eval_node(const SweepingProcess& S, double t, int m) {
  NodeResult r;
  try {
    r.point = talweg_at(S, t, m);
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
  }
  return r;
}

TalwegTable assemble(const SweepingProcess& S, const std::vector<double>& grid,
                     int m, bool endpoint_failures_as_critical, double a,
                     double b) {
  std::vector<NodeResult> results(grid.size());
  par_for(grid.size(), [&](std::size_t i) {
    results[i] = eval_node(S, grid[i], m);
  });

  TalwegTable table;
  table.grid.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    NodeResult& r = results[i];
    const bool at_endpoint =
        std::abs(grid[i] - a) <= 1e-12 * (1.0 + std::abs(a)) ||
        std::abs(grid[i] - b) <= 1e-12 * (1.0 + std::abs(b));
    if (r.failed) {
      if (endpoint_failures_as_critical && at_endpoint) {
        r.point.phi_up = kInf;
        r.point.phi_sym = kInf;
        r.point.critical = true;
        r.point.argmax.clear();
      } else {
        throw ProcessError("talweg sampling failed at t = " +
                           std::to_string(grid[i]) + ": " + r.error);
      }
    }
    table.grid.push_back(grid[i]);
    table.phi_up.push_back(r.point.phi_up);
    table.phi_sym.push_back(r.point.phi_sym);
    table.argmax_points.push_back(r.point.argmax);
    table.critical.push_back(r.point.critical ? 1 : 0);
  }
  return table;
}

double jump_size(double x, double y) {
  if (std::isinf(x) || std::isinf(y)) {
    if (std::isinf(x) && std::isinf(y)) return 0.0;
    return kInf;
  }
  return std::abs(x - y);
}

// One adaptive pass: bisect adjacent pairs with a large phi_up jump, largest
// jumps first, keeping the total node count within the budget.
std::vector<double> bisection_midpoints(const TalwegTable& table, int budget) {
  struct Cell {
    double jump;
    std::size_t index;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i + 1 < table.size(); ++i) {
    const double j = jump_size(table.phi_up[i], table.phi_up[i + 1]);
    const double floor_v =
        std::min(std::isinf(table.phi_up[i]) ? 0.0 : table.phi_up[i],
                 std::isinf(table.phi_up[i + 1]) ? 0.0 : table.phi_up[i + 1]);
    if (j > 0.25 * (1.0 + floor_v)) cells.push_back({j, i});
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& x, const Cell& y) {
    if (x.jump != y.jump) return x.jump > y.jump;
    return x.index < y.index;
  });
  std::vector<double> mids;
  for (const Cell& c : cells) {
    if (static_cast<int>(mids.size()) >= budget) break;
    mids.push_back(0.5 * (table.grid[c.index] + table.grid[c.index + 1]));
  }
  return mids;
}

TalwegTable merge_nodes(const SweepingProcess& S, const TalwegTable& base,
                        const std::vector<double>& extra, int m,
                        bool endpoint_failures_as_critical, double a,
                        double b) {
  std::vector<double> grid(base.grid);
  grid.insert(grid.end(), extra.begin(), extra.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return assemble(S, grid, m, endpoint_failures_as_critical, a, b);
}

}  // namespace

TalwegTable sample_talweg(const SweepingProcess& S, double a, double b,
                          int nodes, int m) {
  S.require_time(a);
  S.require_time(b);
  if (nodes < 2) throw ProcessError("sample_talweg needs nodes >= 2");
  if (!(a < b)) throw ProcessError("sample_talweg needs a < b");

  std::vector<double> grid(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i)
    grid[static_cast<std::size_t>(i)] = a + (b - a) * i / (nodes - 1);

  TalwegTable table = assemble(S, grid, m, false, a, b);
  const int budget = 4 * nodes - nodes;
  const auto mids = bisection_midpoints(table, budget);
  if (mids.empty()) return table;
  return merge_nodes(S, table, mids, m, false, a, b);
}

TalwegTable sample_talweg_refined(const SweepingProcess& S, double a, double b,
                                  int nodes, int m, int subdiv) {
  S.require_time(a);
  S.require_time(b);
  if (nodes < 2) throw ProcessError("sample_talweg_refined needs nodes >= 2");
  if (!(a < b)) throw ProcessError("sample_talweg_refined needs a < b");
  if (subdiv <= 0) {
    const bool cheap_boundary = S.kind() == ProcessKind::interval ||
                                S.kind() == ProcessKind::two_intervals;
    subdiv = cheap_boundary ? 2048 : 24;
  }

  std::set<double> grid;
  for (int i = 0; i < nodes; ++i) grid.insert(a + (b - a) * i / (nodes - 1));

  const double span = b - a;
  for (int end = 0; end < 2; ++end) {
    double outer = span;  // previous level offset
    for (int level = 1; level <= kClusterLevels; ++level) {
      const double inner = span * std::pow(0.5, level);
      // subdivide the cell between the two cluster offsets
      for (int k = 0; k < subdiv; ++k) {
        const double off = inner + (outer - inner) * k / subdiv;
        const double t = end == 0 ? a + off : b - off;
        if (t > a && t < b) grid.insert(t);
      }
      outer = inner;
    }
  }

  std::vector<double> gv(grid.begin(), grid.end());
  TalwegTable table = assemble(S, gv, m, true, a, b);
  // one bisection pass on the uniform backbone scale
  const auto mids = bisection_midpoints(table, nodes);
  if (mids.empty()) return table;
  return merge_nodes(S, table, mids, m, true, a, b);
}

// ---------------------------------------------------------------------------
// Table helpers
// ---------------------------------------------------------------------------

bool TalwegTable::any_critical_inside(double a, double b) const {
  const double fuzz = endpoint_fuzz(a, b);
  for (std::size_t i = 0; i < size(); ++i) {
    if (!critical[i]) continue;
    if (grid[i] > a + fuzz && grid[i] < b - fuzz) return true;
  }
  return false;
}

double TalwegTable::phi_up_at(double t) const {
  // previous/next finite nodes around t
  std::size_t hi = 0;
  while (hi < size() && grid[hi] < t) ++hi;
  auto finite_at = [&](std::size_t i) {
    return i < size() && std::isfinite(phi_up[i]);
  };
  if (hi == 0) return finite_at(0) ? phi_up[0] : 0.0;
  if (hi >= size()) return finite_at(size() - 1) ? phi_up[size() - 1] : 0.0;
  std::size_t lo = hi - 1;
  while (lo > 0 && !finite_at(lo)) --lo;
  while (hi + 1 < size() && !finite_at(hi)) ++hi;
  if (!finite_at(lo) || !finite_at(hi))
    return finite_at(lo) ? phi_up[lo] : (finite_at(hi) ? phi_up[hi] : 0.0);
  const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
  return phi_up[lo] + w * (phi_up[hi] - phi_up[lo]);
}

double TalwegTable::max_phi_up(double lo, double hi) const {
  double worst = std::max(phi_up_at(lo), phi_up_at(hi));
  for (std::size_t i = 0; i < size(); ++i)
    if (grid[i] >= lo && grid[i] <= hi && std::isfinite(phi_up[i]))
      worst = std::max(worst, phi_up[i]);
  return worst;
}

// ---------------------------------------------------------------------------
// Integration and verdict
// ---------------------------------------------------------------------------

const char* to_string(IntegralVerdict v) {
  switch (v) {
    case IntegralVerdict::convergent: return "convergent";
    case IntegralVerdict::divergent_at_a: return "divergent-at-a";
    case IntegralVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

// Trapezoid of the table's finite nodes restricted to [lo, hi], with linear
// interpolation at the window edges.
double window_integral(const TalwegTable& table, double lo, double hi) {
  std::vector<double> ts, vs;
  ts.push_back(lo);
  vs.push_back(table.phi_up_at(lo));
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.grid[i] > lo && table.grid[i] < hi &&
        std::isfinite(table.phi_up[i])) {
      ts.push_back(table.grid[i]);
      vs.push_back(table.phi_up[i]);
    }
  }
  ts.push_back(hi);
  vs.push_back(table.phi_up_at(hi));
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i)
    acc += 0.5 * (vs[i] + vs[i + 1]) * (ts[i + 1] - ts[i]);
  return acc;
}

// Geometric-decay classification of dyadic tail windows. Returns the
// geometric mean ratio of successive partial integrals, or 0 when the tail
// is identically negligible.
double tail_ratio(const TalwegTable& table, double a, double b, bool left) {
  const double span = b - a;
  const int k_lo = 2, k_hi = 9;
  std::vector<double> partials;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double eps = span * std::pow(0.5, k);
    const double lo = left ? a + eps : b - 2.0 * eps;
    const double hi = left ? a + 2.0 * eps : b - eps;
    partials.push_back(window_integral(table, lo, hi));
  }
  const double tiny = 1e-14 * (1.0 + std::abs(window_integral(table, a, b)));
  bool all_tiny = true;
  for (double p : partials)
    if (p > tiny) all_tiny = false;
  if (all_tiny) return 0.0;

  double log_sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i + 1 < partials.size(); ++i) {
    const double num = std::max(partials[i + 1], tiny);
    const double den = std::max(partials[i], tiny);
    log_sum += std::log(num / den);
    ++count;
  }
  return std::exp(log_sum / count);
}

}  // namespace

TalwegIntegral integrate_talweg(const TalwegTable& table, double a, double b) {
  if (table.size() < 2) throw ProcessError("talweg table too small");
  const double fuzz = 1e-9 * (1.0 + std::abs(b - a));
  if (table.grid.front() > a + fuzz || table.grid.back() < b - fuzz)
    throw ProcessError("talweg table does not cover the window");
  if (table.any_critical_inside(a, b))
    throw ProcessError("critical value inside window");

  TalwegIntegral out;
  out.value = window_integral(table, a, b);

  const double left = tail_ratio(table, a, b, true);
  const double right = tail_ratio(table, a, b, false);
  if (left >= 0.98) {
    out.verdict = IntegralVerdict::divergent_at_a;
  } else if (left <= 0.9 && right <= 0.9) {
    out.verdict = IntegralVerdict::convergent;
  } else {
    out.verdict = IntegralVerdict::inconclusive;
  }
  return out;
}

}  // namespace sweep
