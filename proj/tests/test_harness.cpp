#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>

#include <json.hpp>

#include "sweep/catalog.hpp"
#include "sweep/desingularize.hpp"
#include "sweep/dynamics.hpp"
#include "sweep/parallel.hpp"
#include "sweep/report.hpp"

using namespace sweep;

TEST_CASE("catalog carries the expected entries") {
  const auto& entries = catalog();
  CHECK(entries.size() >= 6);

  const CatalogEntry* quad = find_catalog_entry("sublevel_quadratic");
  REQUIRE(quad != nullptr);
  CHECK(quad->window_a == doctest::Approx(-0.25));
  CHECK(quad->window_b == doctest::Approx(0.0));
  CHECK(quad->expected_verdict == IntegralVerdict::convergent);
  CHECK_FALSE(quad->counterexample);

  const CatalogEntry* osc = find_catalog_entry("oscillatory_interval");
  REQUIRE(osc != nullptr);
  CHECK(osc->counterexample);
  CHECK(osc->expected_verdict == IntegralVerdict::divergent_at_a);

  const CatalogEntry* grow = find_catalog_entry("expanding_disk");
  REQUIRE(grow != nullptr);
  const SigmaTable sigma =
      sigma_from_talweg(grow->process, grow->window_a, grow->window_b);
  CHECK(sigma.at(grow->window_b) == doctest::Approx(0.0));

  for (const char* name : {"shrinking_disk", "expanding_disk", "moving_ball",
                           "sublevel_quadratic", "oscillatory_interval",
                           "two_intervals"})
    CHECK(find_catalog_entry(name) != nullptr);
}

TEST_CASE("process JSON loading round trip") {
  const std::string text = R"({
    "kind": "moving_ball", "dim": 2, "domain": [null, 1.0],
    "center": ["0", "0"], "radius": "1 - t"
  })";
  const SweepingProcess S = process_from_json_text(text);
  CHECK(S.kind() == ProcessKind::moving_ball);
  CHECK(S.dim() == 2);
  CHECK(contains(S, 0.5, Vec{0.4, 0.0}));

  CHECK_THROWS_AS(process_from_json_text("{\"kind\": \"nope\"}"), ProcessError);
  CHECK_THROWS_AS(process_from_json_text("not json"), ProcessError);
  const std::string bad_domain = R"({
    "kind": "interval", "dim": 1, "domain": [1.0, 0.0],
    "lower": "0", "upper": "1"
  })";
  CHECK_THROWS_AS(process_from_json_text(bad_domain), ProcessError);
}

TEST_CASE("talweg CSV schema") {
  const CatalogEntry* disk = find_catalog_entry("shrinking_disk");
  REQUIRE(disk != nullptr);
  const TalwegTable table = sample_talweg(disk->process, 0.0, 0.5, 9, 16);
  const std::string csv = talweg_csv(table);
  CHECK(csv.rfind("t,phi_up,phi_sym,critical\n", 0) == 0);
  std::size_t rows = 0;
  for (char c : csv)
    if (c == '\n') ++rows;
  CHECK(rows == table.size() + 1);
}

TEST_CASE("orbit and sequence CSV schemas") {
  const CatalogEntry* disk = find_catalog_entry("shrinking_disk");
  REQUIRE(disk != nullptr);
  const Orbit orbit =
      discretize_orbit(disk->process, 0.0, 0.5, 64, Vec{1.0, 0.0});
  const std::string ocsv = orbit_csv(disk->process, orbit);
  CHECK(ocsv.rfind("t,x1,x2,speed_est,asym_modulus\n", 0) == 0);

  const CatchingUpSequence seq =
      catching_up(disk->process, 0.0, 0.5, 16, Vec{1.0, 0.0});
  const std::string scsv = sequence_csv(seq);
  CHECK(scsv.rfind("t,x1,x2,step_displacement\n", 0) == 0);
}

TEST_CASE("psi CSV has 257 rows") {
  const CatalogEntry* disk = find_catalog_entry("shrinking_disk");
  REQUIRE(disk != nullptr);
  const DesingularizationMap map = build_map(disk->process, 0.0, 0.5, 17);
  const std::string csv = psi_csv(map);
  CHECK(csv.rfind("r,psi,psi_prime\n", 0) == 0);
  std::size_t rows = 0;
  for (char c : csv)
    if (c == '\n') ++rows;
  CHECK(rows == 258);  // header + 257 samples
}

TEST_CASE("svg emission is a single polyline with axes") {
  const std::vector<double> xs{0.0, 0.5, 1.0};
  const std::vector<double> ys{1.0, 0.5, 1.5};
  const std::string svg = svg_polyline(xs, ys, "t", "value");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  // exactly one polyline
  CHECK(svg.find("<polyline", svg.find("<polyline") + 1) == std::string::npos);
}

TEST_CASE("suite report on the shrinking disk passes all checks") {
  const CatalogEntry* disk = find_catalog_entry("shrinking_disk");
  REQUIRE(disk != nullptr);
  SuiteConfig config;
  config.suite = "lemmas";  // keep this unit test quick
  const VerificationReport report = run_suite(*disk, config);
  CHECK(report.overall_pass);
  REQUIRE(report.checks.size() == 10);
  for (const CheckResult& c : report.checks) {
    if (c.id.rfind("L.", 0) == 0) {
      CHECK(c.status == CheckStatus::pass);
    } else {
      CHECK(c.status == CheckStatus::not_applicable);
    }
  }
  // ids are unique and sorted
  for (std::size_t i = 1; i < report.checks.size(); ++i)
    CHECK(report.checks[i - 1].id < report.checks[i].id);
}

TEST_CASE("report JSON carries the fixed schema") {
  const CatalogEntry* disk = find_catalog_entry("shrinking_disk");
  REQUIRE(disk != nullptr);
  SuiteConfig config;
  config.suite = "lemmas";
  const VerificationReport report = run_suite(*disk, config);
  const std::string text = report_json(report);
  const auto j = nlohmann::json::parse(text);
  for (const char* key :
       {"process", "window", "checks", "diagnostics", "provenance"})
    CHECK(j.contains(key));
  CHECK(j["checks"].size() == 10);
  CHECK(j["provenance"]["seed"] == 0);
  CHECK(j["provenance"].contains("config_hash"));
}

TEST_CASE("serial and parallel kernels produce identical tables") {
  const CatalogEntry* quad = find_catalog_entry("sublevel_quadratic");
  REQUIRE(quad != nullptr);
  set_execution(Exec::serial);
  const TalwegTable serial_table =
      sample_talweg(quad->process, -0.25, -0.01, 17, 24);
  set_execution(Exec::parallel);
  const TalwegTable parallel_table =
      sample_talweg(quad->process, -0.25, -0.01, 17, 24);
  REQUIRE(serial_table.size() == parallel_table.size());
  for (std::size_t i = 0; i < serial_table.size(); ++i) {
    CHECK(serial_table.grid[i] == parallel_table.grid[i]);
    CHECK(serial_table.phi_up[i] == parallel_table.phi_up[i]);
    CHECK(serial_table.phi_sym[i] == parallel_table.phi_sym[i]);
    CHECK(serial_table.critical[i] == parallel_table.critical[i]);
  }
}

TEST_CASE("identical configs produce byte-identical reports") {
  const CatalogEntry* disk = find_catalog_entry("shrinking_disk");
  REQUIRE(disk != nullptr);
  SuiteConfig config;
  config.suite = "lemmas";
  const std::string first = report_json(run_suite(*disk, config));
  const std::string second = report_json(run_suite(*disk, config));
  CHECK(first == second);
}
