#include "sweep/coderivative.hpp"

#include <algorithm>
#include <cmath>

namespace sweep {

namespace {

// The stored ray is scale-normalized, but the moduli formulas are invariant
// under positive rescaling, so we only rely on u != 0 vs u == 0.
double spatial_norm(const NormalRay& ray) { return norm(ray.u); }

}  // namespace

ModulusValue asym_modulus(const NormalRay& ray) {
  if (ray.zero) return ModulusValue::finite(0.0);
  const double un = spatial_norm(ray);
  if (un > 0.0) return ModulusValue::finite(std::max(0.0, ray.alpha / un));
  if (ray.alpha > 0.0) return ModulusValue::infinite();
  return ModulusValue::finite(0.0);
}

ModulusValue sym_modulus(const NormalRay& ray) {
  if (ray.zero) return ModulusValue::finite(0.0);
  const double un = spatial_norm(ray);
  if (un > 0.0) return ModulusValue::finite(std::abs(ray.alpha) / un);
  if (ray.alpha != 0.0) return ModulusValue::infinite();
  return ModulusValue::finite(0.0);
}

ModulusPair modulus_from_ray(const NormalRay& ray) {
  return ModulusPair{asym_modulus(ray), sym_modulus(ray)};
}

ModulusPair modulus_at(const SweepingProcess& S, double t,
                       std::span<const double> x) {
  NormalRay ray;
  try {
    ray = boundary_normal(S, t, x);
  } catch (const ManifoldViolation& violation) {
    // vertical normal: rebuild the degenerate ray from the time component
    ray.alpha = violation.time_component() >= 0.0 ? 1.0 : -1.0;
    ray.u.assign(static_cast<std::size_t>(S.dim()), 0.0);
  }
  return modulus_from_ray(ray);
}

std::vector<double> default_calm_steps() {
  std::vector<double> steps;
  steps.reserve(11);
  for (int k = 0; k <= 10; ++k) steps.push_back(1e-2 * std::pow(2.0, -k));
  return steps;
}

double oriented_calm_estimate(const SweepingProcess& S, double t,
                              std::span<const double> x,
                              std::span<const double> steps) {
  double worst = 0.0;
  for (const double dt : steps) {
    if (dt <= 0.0) throw ProcessError("calm estimate steps must be positive");
    S.require_time(t + dt);
    const Vec y = project(S, t + dt, x);
    worst = std::max(worst, distance(x, y) / dt);
  }
  return worst;
}

double oriented_calm_estimate(const SweepingProcess& S, double t,
                              std::span<const double> x) {
  const auto steps = default_calm_steps();
  return oriented_calm_estimate(S, t, x, steps);
}

double stabilized_calm_estimate(const SweepingProcess& S, double t,
                                std::span<const double> x, double settle_tol) {
  double dt = 1e-7;
  auto quotient = [&](double step) {
    const Vec y = project(S, t + step, x);
    return distance(x, y) / step;
  };
  double prev = quotient(dt);
  for (int k = 0; k < 20; ++k) {
    dt *= 0.5;
    const double cur = quotient(dt);
    if (std::abs(cur - prev) <= settle_tol) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace sweep
