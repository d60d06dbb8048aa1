#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "sweep/vec.hpp"

namespace sweep {

// Deterministic generator (splitmix64). Reports must be reproducible across
// runs and platforms, so we avoid the implementation-defined std
// distributions entirely.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  double gaussian() {
    // Box-Muller; one value per call keeps the stream position obvious.
    double u1 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec unit_vector(int dim) {
    Vec v(static_cast<std::size_t>(dim));
    double n = 0.0;
    do {
      for (double& c : v) c = gaussian();
      n = norm(v);
    } while (n < 1e-12);
    scale_in_place(v, 1.0 / n);
    return v;
  }

 private:
  std::uint64_t state_;
};

}  // namespace sweep
