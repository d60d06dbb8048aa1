#include "sweep/catalog.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace sweep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<CatalogEntry> make_catalog() {
  std::vector<CatalogEntry> entries;

  entries.push_back(CatalogEntry{
      .name = "shrinking_disk",
      .summary =
          "disk of radius 1 - t; the boundary sweeps inward at unit speed",
      .process = SweepingProcess::moving_ball(
          {parse_field("0", 2), parse_field("0", 2)}, parse_field("1 - t", 2),
          ProcessDomain{-kInf, 1.0}),
      .window_a = 0.0,
      .window_b = 0.5,
      .expected_verdict = IntegralVerdict::convergent,
      .counterexample = false,
      .velocity_a = 0.0,
      .velocity_b = 0.5,
      .velocity_steps = 1 << 13,
  });

  entries.push_back(CatalogEntry{
      .name = "expanding_disk",
      .summary =
          "disk of radius 1 + t; members persist, zero oriented talweg",
      .process = SweepingProcess::moving_ball(
          {parse_field("0", 2), parse_field("0", 2)}, parse_field("1 + t", 2),
          ProcessDomain{-0.5, kInf}),
      .window_a = 0.0,
      .window_b = 1.0,
      .expected_verdict = IntegralVerdict::convergent,
      .counterexample = false,
      .velocity_a = 0.0,
      .velocity_b = 1.0,
      .velocity_steps = 1 << 13,
  });

  entries.push_back(CatalogEntry{
      .name = "moving_ball",
      .summary = "unit disk translating along the x1 axis at unit speed",
      .process = SweepingProcess::moving_ball(
          {parse_field("t", 2), parse_field("0", 2)}, parse_field("1", 2),
          ProcessDomain{-kInf, kInf}),
      .window_a = 0.0,
      .window_b = 1.0,
      .expected_verdict = IntegralVerdict::convergent,
      .counterexample = false,
      .velocity_a = 0.0,
      .velocity_b = 1.0,
      .velocity_steps = 1 << 13,
  });

  entries.push_back(CatalogEntry{
      .name = "sublevel_quadratic",
      .summary =
          "S(t) = {x : |x|^2 <= -t}; the slice collapses to a point at t = 0",
      .process = SweepingProcess::sublevel(parse_field("x1^2 + x2^2", 2),
                                           ProcessDomain{-kInf, 0.0}),
      .window_a = -0.25,
      .window_b = 0.0,
      .expected_verdict = IntegralVerdict::convergent,
      .counterexample = false,
      .velocity_a = -0.25,
      .velocity_b = -0.01,
      .velocity_steps = 1 << 14,
  });

  entries.push_back(CatalogEntry{
      .name = "oscillatory_interval",
      .summary =
          "S(t) = [-2, t^2 (2 + sin(1/t^2))]; the upper edge has unbounded "
          "variation toward t = 0",
      .process = SweepingProcess::interval(
          parse_field("-2", 1), parse_field("t^2 * (2 + sin(1 / t^2))", 1),
          ProcessDomain{0.0, 0.5}),
      .window_a = 0.0,
      .window_b = 0.3,
      .expected_verdict = IntegralVerdict::divergent_at_a,
      .counterexample = true,
      .velocity_a = 0.22,
      .velocity_b = 0.3,
      .velocity_steps = 1 << 15,
  });

  entries.push_back(CatalogEntry{
      .name = "two_intervals",
      .summary = "S(t) = [-2, -t] u [t, 2]; the gap widens at unit speed",
      .process = SweepingProcess::two_intervals(
          parse_field("-2", 1), parse_field("-t", 1), parse_field("t", 1),
          parse_field("2", 1), ProcessDomain{1e-3, 1.0}),
      .window_a = 0.1,
      .window_b = 0.5,
      .expected_verdict = IntegralVerdict::convergent,
      .counterexample = false,
      .velocity_a = 0.1,
      .velocity_b = 0.5,
      .velocity_steps = 1 << 13,
  });

  return entries;
}

double domain_bound(const nlohmann::json& v, bool lower) {
  if (v.is_null()) return lower ? -kInf : kInf;
  if (!v.is_number())
    throw ProcessError("domain entries must be numbers or null");
  return v.get<double>();
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = make_catalog();
  return entries;
}

const CatalogEntry* find_catalog_entry(const std::string& name) {
  for (const CatalogEntry& e : catalog())
    if (e.name == name) return &e;
  return nullptr;
}

SweepingProcess process_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProcessError(std::string("process JSON parse error: ") + e.what());
  }

  const auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key))
      throw ProcessError(std::string("process JSON missing field '") + key +
                         "'");
    return j.at(key);
  };

  const std::string kind = require("kind").get<std::string>();
  const int dim = require("dim").get<int>();
  if (dim < 1) throw ProcessError("process dim must be positive");
  const auto& dom = require("domain");
  if (!dom.is_array() || dom.size() != 2)
    throw ProcessError("process domain must be [t_min, t_max]");
  const ProcessDomain domain{domain_bound(dom[0], true),
                             domain_bound(dom[1], false)};
  const bool cert = j.value("smooth_certificate", true);

  const auto formula = [&](const char* key) {
    const auto& v = require(key);
    if (!v.is_string())
      throw ProcessError(std::string("field '") + key + "' must be a formula string");
    return parse_field(v.get<std::string>(), dim);
  };

  if (kind == "sublevel")
    return SweepingProcess::sublevel(formula("f"), domain, cert);
  if (kind == "implicit")
    return SweepingProcess::implicit(formula("g"), domain, cert);
  if (kind == "moving_ball") {
    const auto& c = require("center");
    if (!c.is_array() || static_cast<int>(c.size()) != dim)
      throw ProcessError("moving_ball center must list dim formulas");
    std::vector<FieldExpr> center;
    for (const auto& comp : c)
      center.push_back(parse_field(comp.get<std::string>(), dim));
    return SweepingProcess::moving_ball(std::move(center), formula("radius"),
                                        domain, cert);
  }
  if (kind == "interval") {
    if (dim != 1) throw ProcessError("interval processes have dim 1");
    return SweepingProcess::interval(formula("lower"), formula("upper"),
                                     domain, cert);
  }
  if (kind == "two_intervals") {
    if (dim != 1) throw ProcessError("two_intervals processes have dim 1");
    return SweepingProcess::two_intervals(formula("a1"), formula("b1"),
                                          formula("a2"), formula("b2"), domain,
                                          cert);
  }
  throw ProcessError("unknown process kind '" + kind + "'");
}

SweepingProcess process_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProcessError("cannot open process file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return process_from_json_text(ss.str());
}

}  // namespace sweep
