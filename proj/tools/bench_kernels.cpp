// Times the data-parallel kernels against the serial reference
// implementation and checks that both produce identical tables.

#include <chrono>
#include <cstdio>

#include "sweep/catalog.hpp"
#include "sweep/dynamics.hpp"
#include "sweep/parallel.hpp"
#include "sweep/talweg.hpp"

using namespace sweep;

namespace {

template <class F>
double time_ms(F&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

bool tables_identical(const TalwegTable& a, const TalwegTable& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.grid[i] != b.grid[i]) return false;
    if (a.phi_up[i] != b.phi_up[i] && !(std::isnan(a.phi_up[i]) && std::isnan(b.phi_up[i])))
      return false;
    if (a.phi_sym[i] != b.phi_sym[i]) return false;
    if (a.critical[i] != b.critical[i]) return false;
  }
  return true;
}

}  // namespace

int main() {
  const CatalogEntry* quad = find_catalog_entry("sublevel_quadratic");
  const CatalogEntry* disk = find_catalog_entry("shrinking_disk");
  if (!quad || !disk) {
    std::fprintf(stderr, "catalog entries missing\n");
    return 1;
  }

  struct Case {
    const char* name;
    const SweepingProcess* S;
    double a, b;
    int nodes, m;
  };
  const Case cases[] = {
      {"talweg shrinking_disk", &disk->process, 0.0, 0.5, 129, 64},
      {"talweg sublevel_quadratic", &quad->process, -0.25, -0.01, 65, 48},
  };

  std::printf("%-28s %12s %12s %9s %s\n", "kernel", "serial(ms)",
              "parallel(ms)", "speedup", "identical");
  for (const Case& c : cases) {
    TalwegTable serial_table, parallel_table;
    set_execution(Exec::serial);
    const double t_serial = time_ms([&] {
      serial_table = sample_talweg(*c.S, c.a, c.b, c.nodes, c.m);
    });
    set_execution(Exec::parallel);
    const double t_parallel = time_ms([&] {
      parallel_table = sample_talweg(*c.S, c.a, c.b, c.nodes, c.m);
    });
    std::printf("%-28s %12.1f %12.1f %8.2fx %s\n", c.name, t_serial,
                t_parallel, t_serial / t_parallel,
                tables_identical(serial_table, parallel_table) ? "yes" : "NO");
  }

  {
    ExcessEstimate serial_est{}, parallel_est{};
    set_execution(Exec::serial);
    const double t_serial = time_ms([&] {
      serial_est = excess_estimate(quad->process, -0.25, -0.05, 512);
    });
    set_execution(Exec::parallel);
    const double t_parallel = time_ms([&] {
      parallel_est = excess_estimate(quad->process, -0.25, -0.05, 512);
    });
    const bool same = serial_est.excess == parallel_est.excess &&
                      serial_est.hausdorff == parallel_est.hausdorff;
    std::printf("%-28s %12.1f %12.1f %8.2fx %s\n", "excess sublevel_quadratic",
                t_serial, t_parallel, t_serial / t_parallel,
                same ? "yes" : "NO");
  }

  set_execution(Exec::parallel);
  return 0;
}
