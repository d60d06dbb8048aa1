#pragma once

#include <string>
#include <vector>

#include "sweep/process.hpp"
#include "sweep/talweg.hpp"

namespace sweep {

struct CatalogEntry {
  std::string name;
  std::string summary;
  SweepingProcess process;
  double window_a = 0.0;
  double window_b = 0.0;
  IntegralVerdict expected_verdict = IntegralVerdict::convergent;
  bool counterexample = false;
  // window and resolution used by the velocity-law check
  double velocity_a = 0.0;
  double velocity_b = 0.0;
  int velocity_steps = 1 << 13;
};

// Builtin processes with recommended windows and expected verdicts.
const std::vector<CatalogEntry>& catalog();

const CatalogEntry* find_catalog_entry(const std::string& name);

// Process JSON schema:
//   {"kind": "sublevel",      "dim": n, "domain": [lo, hi], "f": "..."}
//   {"kind": "implicit",      "dim": n, "domain": [lo, hi], "g": "..."}
//   {"kind": "moving_ball",   "dim": n, "domain": [lo, hi],
//    "center": ["...", ...], "radius": "..."}
//   {"kind": "interval",      "dim": 1, "domain": [lo, hi],
//    "lower": "...", "upper": "..."}
//   {"kind": "two_intervals", "dim": 1, "domain": [lo, hi],
//    "a1": "...", "b1": "...", "a2": "...", "b2": "..."}
// domain entries may be null for an unbounded side; "smooth_certificate"
// (bool, default true) is accepted on every kind.
SweepingProcess process_from_json_text(const std::string& text);
SweepingProcess process_from_json_file(const std::string& path);

}  // namespace sweep
