#pragma once

#include <vector>

#include "sweep/talweg.hpp"

namespace sweep {

// Cumulative integral of the raw oriented talweg: sigma(t) = integral of
// phi_up from a to t, evaluated by interpolation between table nodes.
struct SigmaTable {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> t;
  std::vector<double> sigma;
  std::vector<double> phi_cache;  // node values of phi_up for interpolation

  double at(double time) const;
};

// Time reparametrization from the majorant primitive: theta(t) is the
// cumulative integral of max(phi_up, 1) and Psi its monotone inverse,
// interpolated by a monotonicity-preserving piecewise cubic. psi_prime comes
// from the reciprocal of the majorant, not from differentiating the
// interpolant.
struct DesingularizationMap {
  double a = 0.0;
  double b = 0.0;
  double rho = 0.0;  // theta(b)

  std::vector<double> theta_t;  // node times
  std::vector<double> theta_v;  // theta at the nodes (strictly increasing)
  // Hermite slopes of the inverse at the nodes: the reciprocal values
  // 1/max(phi_up, 1), clamped into the monotonicity region
  std::vector<double> node_slopes;
  std::vector<double> recip_majorant;  // 1 / max(phi_up, 1) at the nodes

  double psi(double r) const;
  double psi_prime(double r) const;
  // the primitive itself, reconstructed exactly from the node data
  double theta(double t) const;
};

// Replaces phi_up by max(phi_up, 1); errors when a critical flag sits
// strictly inside the window spanned by the table.
TalwegTable build_majorant(const TalwegTable& table);

DesingularizationMap build_map(const SweepingProcess& S, double a, double b,
                               int nodes);

// Same construction from an already-sampled quadrature-grade table.
DesingularizationMap build_map_from_table(const TalwegTable& table, double a,
                                          double b);

struct DesingularizationCheck {
  double max_product = 0.0;  // max of psi'(r) * asym modulus at slice argmax
  bool pass = false;
};

DesingularizationCheck verify_desingularized(const SweepingProcess& S,
                                             const DesingularizationMap& map,
                                             int samples);

SigmaTable sigma_from_talweg(const SweepingProcess& S, double a, double b);
SigmaTable sigma_from_table(const TalwegTable& table, double a, double b);

}  // namespace sweep
