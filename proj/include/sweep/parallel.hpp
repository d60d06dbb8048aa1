#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sweep {

// Execution policy for the data-parallel kernels (talweg grids, sample
// sweeps, window batches). The serial path is the reference implementation;
// parallel runs must produce bit-identical results because every loop body
// writes only its own slot and reductions happen serially afterwards.
enum class Exec { serial, parallel };

Exec execution() noexcept;
void set_execution(Exec mode) noexcept;

// Loop bodies must not throw; kernels record per-slot failures instead so
// that error handling stays deterministic in index order.
template <class F>
void par_for(std::size_t n, F&& body) {
#ifdef _OPENMP
  if (execution() == Exec::parallel) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      body(static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace sweep
