#include "sweep/desingularize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sweep/parallel.hpp"

namespace sweep {

namespace {

constexpr int kRefinedNodes = 65;
constexpr int kBoundarySamples = 64;

struct FiniteSeries {
  std::vector<double> t;
  std::vector<double> phi;
  bool left_critical = false;
  bool right_critical = false;
};

// Finite nodes of the table restricted to [a, b], remembering whether the
// window endpoints carried critical flags.
FiniteSeries finite_series(const TalwegTable& table, double a, double b,
                           bool majorant) {
  FiniteSeries s;
  const double fuzz = endpoint_fuzz(a, b);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double t = table.grid[i];
    if (t < a - fuzz || t > b + fuzz) continue;
    double v = table.phi_up[i];
    if (majorant) v = std::max(v, 1.0);
    if (table.critical[i] || !std::isfinite(v)) {
      if (t <= a + fuzz) s.left_critical = true;
      else if (t >= b - fuzz) s.right_critical = true;
      else throw ProcessError("critical value inside window");
      continue;
    }
    s.t.push_back(t);
    s.phi.push_back(v);
  }
  if (s.t.size() < 2)
    throw ProcessError("not enough finite talweg nodes in the window");
  return s;
}

std::vector<double> cumulative_trapezoid(const FiniteSeries& s) {
  std::vector<double> acc(s.t.size(), 0.0);
  for (std::size_t i = 1; i < s.t.size(); ++i)
    acc[i] = acc[i - 1] +
             0.5 * (s.phi[i] + s.phi[i - 1]) * (s.t[i] - s.t[i - 1]);
  return acc;
}

// Geometric extrapolation of the missing improper tail beyond the last
// resolved node, from the decay of the deepest dyadic cells.
double tail_mass(const FiniteSeries& s, const std::vector<double>& acc,
                 double a, double b, bool right) {
  const double span = b - a;
  auto integral_to = [&](double t) {
    // acc interpolated at t
    auto it = std::lower_bound(s.t.begin(), s.t.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - s.t.begin());
    if (hi == 0) return acc.front();
    if (hi >= s.t.size()) return acc.back();
    const std::size_t lo = hi - 1;
    const double w = (t - s.t[lo]) / (s.t[hi] - s.t[lo]);
    const double phit = s.phi[lo] + w * (s.phi[hi] - s.phi[lo]);
    return acc[lo] + 0.5 * (s.phi[lo] + phit) * (t - s.t[lo]);
  };
  const double d2 = span * std::pow(0.5, 26);
  const double d1 = span * std::pow(0.5, 27);
  const double d0 = span * std::pow(0.5, 28);
  double c0, c1;
  if (right) {
    c0 = integral_to(b - d1) - integral_to(b - d2);
    c1 = integral_to(b - d0) - integral_to(b - d1);
  } else {
    c0 = integral_to(a + d2) - integral_to(a + d1);
    c1 = integral_to(a + d1) - integral_to(a + d0);
  }
  if (c0 <= 0.0 || c1 <= 0.0) return 0.0;
  const double r = c1 / c0;
  if (r >= 0.999) return c1;  // no reliable decay; keep a crude cap
  return c1 * r / (1.0 - r);
}

// Hermite slopes for the inverse interpolant. The exact node derivatives
// are known (1/majorant); clamping them into the Fritsch-Carlson region of
// every adjacent cell keeps the cubic monotone.
std::vector<double> inverse_slopes(const std::vector<double>& r,
                                   const std::vector<double>& t,
                                   const std::vector<double>& recip) {
  const std::size_t n = r.size();
  std::vector<double> d = recip;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double secant = (t[i + 1] - t[i]) / (r[i + 1] - r[i]);
    if (secant <= 0.0) continue;
    const double cap = 3.0 * secant;
    if (d[i] > cap) d[i] = cap;
    if (d[i + 1] > cap) d[i + 1] = cap;
  }
  for (double& v : d) v = std::max(v, 0.0);
  return d;
}

double hermite(double x0, double x1, double y0, double y1, double d0,
               double d1, double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return y0 * (2.0 * s3 - 3.0 * s2 + 1.0) + h * d0 * (s3 - 2.0 * s2 + s) +
         y1 * (-2.0 * s3 + 3.0 * s2) + h * d1 * (s3 - s2);
}

std::size_t locate(const std::vector<double>& xs, double x) {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  if (hi == 0) return 0;
  if (hi >= xs.size()) return xs.size() - 2;
  return hi - 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// SigmaTable
// ---------------------------------------------------------------------------

double SigmaTable::at(double time) const {
  if (t.empty()) return 0.0;
  if (time <= t.front()) return sigma.front();
  if (time >= t.back()) return sigma.back();
  const std::size_t lo = locate(t, time);
  // sigma is the integral of the piecewise-linear phi, so the cell increment
  // is quadratic; reconstruct it from the stored endpoint values.
  const double h = t[lo + 1] - t[lo];
  const double w = (time - t[lo]) / h;
  const double cell = sigma[lo + 1] - sigma[lo];
  const double phi_lo = phi_cache.empty() ? cell / h : phi_cache[lo];
  const double phi_hi = phi_cache.empty() ? cell / h : phi_cache[lo + 1];
  const double phit = phi_lo + w * (phi_hi - phi_lo);
  return sigma[lo] + 0.5 * (phi_lo + phit) * (time - t[lo]);
}

// ---------------------------------------------------------------------------
// build_majorant
// ---------------------------------------------------------------------------

TalwegTable build_majorant(const TalwegTable& table) {
  if (table.size() < 2) throw ProcessError("talweg table too small");
  const double a = table.grid.front();
  const double b = table.grid.back();
  if (table.any_critical_inside(a, b))
    throw ProcessError("critical value inside window");
  TalwegTable out = table;
  for (double& v : out.phi_up) v = std::max(v, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.phi_sym[i] = std::max(out.phi_sym[i], out.phi_up[i]);
  return out;
}

// ---------------------------------------------------------------------------
// build_map
// ---------------------------------------------------------------------------

DesingularizationMap build_map(const SweepingProcess& S, double a, double b,
                               int nodes) {
  const TalwegTable table =
      sample_talweg_refined(S, a, b, std::max(nodes, 2), kBoundarySamples);
  return build_map_from_table(table, a, b);
}

DesingularizationMap build_map_from_table(const TalwegTable& table, double a,
                                          double b) {
  const TalwegIntegral integral = integrate_talweg(table, a, b);
  if (integral.verdict != IntegralVerdict::convergent)
    throw ProcessError(std::string("cannot desingularize: talweg integral ") +
                       to_string(integral.verdict));

  const FiniteSeries series = finite_series(table, a, b, /*majorant=*/true);
  std::vector<double> theta = cumulative_trapezoid(series);

  DesingularizationMap map;
  map.a = a;
  map.b = b;

  std::vector<double> ts = series.t;
  std::vector<double> ws(series.phi.size());
  for (std::size_t i = 0; i < series.phi.size(); ++i)
    ws[i] = 1.0 / series.phi[i];

  if (series.left_critical || ts.front() > a) {
    const double mass = series.left_critical
                            ? tail_mass(series, theta, a, b, false)
                            : 0.0;
    for (double& v : theta) v += mass;
    theta.insert(theta.begin(), 0.0);
    ts.insert(ts.begin(), a);
    ws.insert(ws.begin(), series.left_critical ? 0.0 : ws.front());
  } else {
    // grid starts exactly at a; theta(a) = 0 already holds
  }
  if (series.right_critical || ts.back() < b) {
    const double mass =
        series.right_critical ? tail_mass(series, theta, a, b, true) : 0.0;
    theta.push_back(theta.back() + std::max(mass, 1e-15));
    ts.push_back(b);
    ws.push_back(series.right_critical ? 0.0 : ws.back());
  }

  for (std::size_t i = 1; i < theta.size(); ++i)
    if (!(theta[i] > theta[i - 1]))
      throw ProcessError("theta is not strictly increasing (numerical)");

  map.rho = theta.back();
  map.theta_t = std::move(ts);
  map.theta_v = std::move(theta);
  map.recip_majorant = std::move(ws);
  map.node_slopes =
      inverse_slopes(map.theta_v, map.theta_t, map.recip_majorant);
  return map;
}

double DesingularizationMap::theta(double t) const {
  if (t <= a) return 0.0;
  if (t >= b) return rho;
  const std::size_t lo = locate(theta_t, t);
  const double h = theta_t[lo + 1] - theta_t[lo];
  const double w = (t - theta_t[lo]) / h;
  const double w0 = recip_majorant[lo];
  const double w1 = recip_majorant[lo + 1];
  if (w0 > 0.0 && w1 > 0.0) {
    // integral of the linear majorant interpolant over the partial cell
    const double phi0 = 1.0 / w0;
    const double phi1 = 1.0 / w1;
    const double phit = phi0 + w * (phi1 - phi0);
    return theta_v[lo] + 0.5 * (phi0 + phit) * (t - theta_t[lo]);
  }
  // cell adjacent to a critical endpoint: interpolate the increment
  return theta_v[lo] + w * (theta_v[lo + 1] - theta_v[lo]);
}

double DesingularizationMap::psi(double r) const {
  if (r <= 0.0) return a;
  if (r >= rho) return b;
  const std::size_t lo = locate(theta_v, r);
  return hermite(theta_v[lo], theta_v[lo + 1], theta_t[lo], theta_t[lo + 1],
                 node_slopes[lo], node_slopes[lo + 1], r);
}

double DesingularizationMap::psi_prime(double r) const {
  if (theta_v.empty()) return 0.0;
  if (r <= theta_v.front()) return recip_majorant.front();
  if (r >= theta_v.back()) return recip_majorant.back();
  const std::size_t lo = locate(theta_v, r);
  const double w = (r - theta_v[lo]) / (theta_v[lo + 1] - theta_v[lo]);
  return recip_majorant[lo] + w * (recip_majorant[lo + 1] - recip_majorant[lo]);
}

// ---------------------------------------------------------------------------
// verify_desingularized
// ---------------------------------------------------------------------------

DesingularizationCheck verify_desingularized(const SweepingProcess& S,
                                             const DesingularizationMap& map,
                                             int samples) {
  if (samples < 1) throw ProcessError("verify needs samples >= 1");
  std::vector<double> products(static_cast<std::size_t>(samples), 0.0);
  std::vector<char> failed(static_cast<std::size_t>(samples), 0);
  par_for(products.size(), [&](std::size_t j) {
    const double r = map.rho * (static_cast<double>(j) + 1.0) / (samples + 1.0);
    try {
      const double t = map.psi(r);
      const TalwegPoint tp = talweg_at(S, t, kBoundarySamples);
      if (tp.critical) {
        products[j] = std::numeric_limits<double>::infinity();
        return;
      }
      products[j] = map.psi_prime(r) * tp.phi_up;
    } catch (const std::exception&) {
      failed[j] = 1;
    }
  });
  DesingularizationCheck check;
  for (std::size_t j = 0; j < products.size(); ++j) {
    if (failed[j])
      throw ProcessError("desingularization verification failed at a sample");
    check.max_product = std::max(check.max_product, products[j]);
  }
  check.pass = check.max_product <= 1.0 + 1e-3;
  return check;
}

// ---------------------------------------------------------------------------
// sigma
// ---------------------------------------------------------------------------

SigmaTable sigma_from_table(const TalwegTable& table, double a, double b) {
  const FiniteSeries series = finite_series(table, a, b, /*majorant=*/false);
  const std::vector<double> acc = cumulative_trapezoid(series);
  const double right_mass =
      series.t.back() < b ? tail_mass(series, acc, a, b, true) : 0.0;
  const double left_mass =
      series.t.front() > a ? tail_mass(series, acc, a, b, false) : 0.0;

  SigmaTable out;
  out.a = a;
  out.b = b;
  out.t = series.t;
  out.sigma = acc;
  out.phi_cache = series.phi;
  if (out.t.front() > a) {
    for (double& v : out.sigma) v += left_mass;
    out.t.insert(out.t.begin(), a);
    out.sigma.insert(out.sigma.begin(), 0.0);
    out.phi_cache.insert(out.phi_cache.begin(), out.phi_cache.front());
  }
  if (out.t.back() < b) {
    out.t.push_back(b);
    out.sigma.push_back(out.sigma.back() + right_mass);
    out.phi_cache.push_back(out.phi_cache.back());
  }
  return out;
}

SigmaTable sigma_from_talweg(const SweepingProcess& S, double a, double b) {
  const TalwegTable table =
      sample_talweg_refined(S, a, b, kRefinedNodes, kBoundarySamples);
  const TalwegIntegral integral = integrate_talweg(table, a, b);
  if (integral.verdict != IntegralVerdict::convergent)
    throw ProcessError(std::string("sigma requires a convergent talweg, got ") +
                       to_string(integral.verdict));
  return sigma_from_table(table, a, b);
}

}  // namespace sweep
