#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sweep/catalog.hpp"
#include "sweep/desingularize.hpp"
#include "sweep/dynamics.hpp"
#include "sweep/process.hpp"
#include "sweep/talweg.hpp"

namespace sweep {

enum class CheckStatus { pass, fail, not_applicable, expected_fail };

const char* to_string(CheckStatus s);

struct CheckResult {
  std::string id;
  CheckStatus status = CheckStatus::not_applicable;
  double measured = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct SuiteDiagnostics {
  bool a2_finite_inside = true;   // no critical talweg nodes strictly inside
  int a2_critical_nodes = 0;
  double a3_max_ratio = 0.0;      // Hausdorff/dt over the diagnostic grid
  int a3_flagged = 0;
};

struct SuiteConfig {
  std::uint64_t seed = 0;
  int talweg_nodes = 65;
  int boundary_samples = 64;
  int random_windows = 10;
  std::string suite = "all";  // theoremA | theoremB | lemmas | all
  bool counterexample = false;
  // window and resolution of the velocity-law check; zeros mean "derive
  // from the suite window"
  double velocity_a = 0.0;
  double velocity_b = 0.0;
  int velocity_steps = 1 << 13;
};

struct VerificationReport {
  std::string process;
  double window_a = 0.0;
  double window_b = 0.0;
  std::vector<CheckResult> checks;  // all ten ids, suite order
  SuiteDiagnostics diagnostics;
  SuiteConfig config;
  std::string config_hash;
  bool overall_pass = true;
  std::string first_failure;
};

VerificationReport run_suite(const SweepingProcess& S, double a, double b,
                             const SuiteConfig& config,
                             const std::string& process_name = "custom");

VerificationReport run_suite(const CatalogEntry& entry,
                             const SuiteConfig& config);

// ---------------------------------------------------------------------------
// Emission: deterministic CSV / JSON / single-polyline SVG writers.
// Floating-point CSV fields carry 17 significant digits.
// ---------------------------------------------------------------------------

std::string talweg_csv(const TalwegTable& table);
std::string orbit_csv(const SweepingProcess& S, const Orbit& orbit);
std::string sequence_csv(const CatchingUpSequence& seq);
std::string psi_csv(const DesingularizationMap& map);  // 257 uniform r rows
std::string report_json(const VerificationReport& report);
std::string svg_polyline(const std::vector<double>& xs,
                         const std::vector<double>& ys,
                         const std::string& x_label,
                         const std::string& y_label);

void write_file(const std::string& path, const std::string& content);

// 0: all checks pass or expected-fail; 1: unexpected failure.
int report_exit_code(const VerificationReport& report);

}  // namespace sweep
