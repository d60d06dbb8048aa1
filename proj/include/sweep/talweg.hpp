#pragma once

#include <span>
#include <vector>

#include "sweep/coderivative.hpp"
#include "sweep/process.hpp"

namespace sweep {

// Sampled talweg values over a time window. phi_up[i] <= phi_sym[i] holds on
// every table; critical[i] marks nodes where a sampled modulus was infinite
// (or the slice could not be evaluated, e.g. at an improper endpoint).
// Nodes closer to a window endpoint than this are treated as part of the
// endpoint when classifying critical values: below this scale the
// interior/boundary tolerance can no longer separate a collapsing slice from
// its critical limit.
inline double endpoint_fuzz(double a, double b) { return (b - a) * 0x1p-20; }

struct TalwegTable {
  std::vector<double> grid;
  std::vector<double> phi_up;
  std::vector<double> phi_sym;
  std::vector<Vec> argmax_points;  // boundary point achieving the phi_up max
  std::vector<char> critical;

  std::size_t size() const { return grid.size(); }
  bool any_critical_inside(double a, double b) const;
  // piecewise-linear interpolation of phi_up (finite nodes only)
  double phi_up_at(double t) const;
  double max_phi_up(double lo, double hi) const;
};

struct TalwegPoint {
  double phi_up = 0.0;
  double phi_sym = 0.0;
  Vec argmax;
  bool critical = false;
};

// Per-slice supremum of the moduli over sampled boundary points, sharpened
// by local ascent (golden section on the boundary parametrization in one and
// two dimensions, direction ascent otherwise). Thin slices without an
// interior anchor are scored at the coarse field minimizer, which typically
// reports the vertical (critical) normal.
TalwegPoint talweg_at(const SweepingProcess& S, double t, int m);

// Uniform grid of `nodes` points plus one adaptive bisection pass; the node
// count never exceeds 4 * nodes.
TalwegTable sample_talweg(const SweepingProcess& S, double a, double b,
                          int nodes, int m);

// Quadrature-grade table: uniform interior nodes plus geometric clusters
// toward both endpoints (ratio 0.5, 30 levels, `subdiv` panels per level).
// Endpoint evaluation failures are recorded as critical nodes instead of
// propagating, so improper windows can still be integrated and classified.
// subdiv <= 0 picks a default based on the process kind (boundary moduli of
// the 1-d kinds are cheap and may oscillate, so they get dense panels).
TalwegTable sample_talweg_refined(const SweepingProcess& S, double a, double b,
                                  int nodes, int m, int subdiv = 0);

enum class IntegralVerdict { convergent, divergent_at_a, inconclusive };

const char* to_string(IntegralVerdict v);

struct TalwegIntegral {
  double value = 0.0;
  IntegralVerdict verdict = IntegralVerdict::inconclusive;
};

// Composite trapezoid over the table restricted to [a, b]. Critical nodes at
// the window endpoints are excluded from the quadrature (improper-integral
// handling); a critical node strictly inside is an error. The verdict
// classifies the left tail by the decay of dyadic partial integrals
// [a + eps, a + 2 eps]; the symmetric right-tail test guards improper upper
// endpoints.
TalwegIntegral integrate_talweg(const TalwegTable& table, double a, double b);

}  // namespace sweep
