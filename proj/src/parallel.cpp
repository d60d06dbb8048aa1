#include "sweep/parallel.hpp"

#include <atomic>

namespace sweep {

namespace {
std::atomic<Exec> g_exec{Exec::parallel};
}

Exec execution() noexcept { return g_exec.load(std::memory_order_relaxed); }

void set_execution(Exec mode) noexcept {
  g_exec.store(mode, std::memory_order_relaxed);
}

}  // namespace sweep
