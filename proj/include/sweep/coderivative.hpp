#pragma once

#include <limits>
#include <span>
#include <vector>

#include "sweep/process.hpp"

namespace sweep {

// Nonnegative modulus, possibly +infinity. The critical flag marks the
// infinite case explicitly so downstream consumers can distinguish "large"
// from "vertical normal".
struct ModulusValue {
  double value = 0.0;
  bool critical = false;

  static ModulusValue finite(double v) { return {v, false}; }
  static ModulusValue infinite() {
    return {std::numeric_limits<double>::infinity(), true};
  }
};

struct ModulusPair {
  ModulusValue asym;
  ModulusValue sym;
};

// sup{a+ : a in D*S(t,x)(u), |u| <= 1} for the cone generated by the ray.
ModulusValue asym_modulus(const NormalRay& ray);

// sup{|a| : a in D*S(t,x)(u), |u| <= 1}.
ModulusValue sym_modulus(const NormalRay& ray);

ModulusPair modulus_from_ray(const NormalRay& ray);

// Composes boundary_normal with both modulus maps; interior points give
// (0, 0). Vertical normals surface as critical values.
ModulusPair modulus_at(const SweepingProcess& S, double t,
                       std::span<const double> x);

std::vector<double> default_calm_steps();

// Upper estimate of the oriented calmness at (t, x) on a geometric step
// ladder: max over dt of d(x, S(t + dt)) / dt.
double oriented_calm_estimate(const SweepingProcess& S, double t,
                              std::span<const double> x,
                              std::span<const double> steps);

double oriented_calm_estimate(const SweepingProcess& S, double t,
                              std::span<const double> x);

// One-sided difference quotient d(x, S(t + dt)) / dt on steps halving from
// 1e-7 until two successive values agree to settle_tol. Curvature of the
// distance function biases any fixed ladder, so comparisons against the
// modulus refine until the estimate settles.
double stabilized_calm_estimate(const SweepingProcess& S, double t,
                                std::span<const double> x,
                                double settle_tol = 3e-4);

}  // namespace sweep
