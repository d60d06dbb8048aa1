#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sweep/catalog.hpp"
#include "sweep/desingularize.hpp"
#include "sweep/dynamics.hpp"
#include "sweep/parallel.hpp"
#include "sweep/report.hpp"
#include "sweep/talweg.hpp"

namespace {

using namespace sweep;

SweepingProcess resolve_process(const std::string& ref, std::string* name,
                                const CatalogEntry** entry) {
  if (const CatalogEntry* e = find_catalog_entry(ref)) {
    if (entry) *entry = e;
    if (name) *name = e->name;
    return e->process;
  }
  if (ref.size() > 5 && ref.substr(ref.size() - 5) == ".json") {
    if (name) *name = ref;
    return process_from_json_file(ref);
  }
  throw ProcessError("unknown process '" + ref +
                     "' (not a catalog name or .json file)");
}

Vec parse_point(const std::string& text) {
  Vec x;
  std::string token;
  for (char c : text) {
    if (c == ',') {
      x.push_back(std::stod(token));
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) x.push_back(std::stod(token));
  if (x.empty()) throw ProcessError("empty start point");
  return x;
}

void emit_series(const std::string& path, const std::string& format,
                 const std::string& csv, const std::vector<double>& xs,
                 const std::vector<double>& ys, const std::string& xl,
                 const std::string& yl) {
  if (format == "csv") {
    write_file(path, csv);
  } else if (format == "svg-polyline" || format == "svg") {
    write_file(path, svg_polyline(xs, ys, xl, yl));
  } else {
    throw ProcessError("unsupported format '" + format + "' for this output");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for sweeping-process dynamics"};
  app.require_subcommand(1);

  bool serial = false;
  app.add_flag("--serial", serial,
               "run kernels on the serial reference implementation");

  // ---- catalog ----
  auto* cmd_catalog = app.add_subcommand("catalog", "list builtin processes");

  // ---- simulate ----
  auto* cmd_sim = app.add_subcommand("simulate", "run a catching-up orbit");
  std::string sim_process, sim_x0, sim_out = "orbit.csv", sim_format = "csv";
  double sim_t0 = 0.0, sim_t1 = 0.0;
  int sim_steps = 256;
  bool sim_refine = false;
  cmd_sim->add_option("--process", sim_process, "catalog name or file.json")
      ->required();
  cmd_sim->add_option("--t0", sim_t0, "window start")->required();
  cmd_sim->add_option("--t1", sim_t1, "window end")->required();
  cmd_sim->add_option("--steps", sim_steps, "uniform grid steps");
  cmd_sim->add_option("--x0", sim_x0, "start point v1,v2,...")->required();
  cmd_sim->add_option("--out", sim_out, "output path");
  cmd_sim->add_option("--format", sim_format, "csv | json | svg-polyline");
  cmd_sim->add_flag("--refine", sim_refine,
                    "refine the grid until the length settles");

  // ---- talweg ----
  auto* cmd_tal = app.add_subcommand("talweg", "sample the talweg functions");
  std::string tal_process, tal_out = "talweg.csv", tal_format = "csv";
  double tal_a = 0.0, tal_b = 0.0;
  int tal_nodes = 65, tal_m = 64;
  bool tal_refined = false;
  cmd_tal->add_option("--process", tal_process, "catalog name or file.json")
      ->required();
  cmd_tal->add_option("--a", tal_a, "window start")->required();
  cmd_tal->add_option("--b", tal_b, "window end")->required();
  cmd_tal->add_option("--nodes", tal_nodes, "grid nodes");
  cmd_tal->add_option("--m", tal_m, "boundary samples per node");
  cmd_tal->add_flag("--refined", tal_refined,
                    "quadrature-grade grid with endpoint clustering");
  cmd_tal->add_option("--out", tal_out, "output path");
  cmd_tal->add_option("--format", tal_format, "csv | svg-polyline");

  // ---- desingularize ----
  auto* cmd_des = app.add_subcommand("desingularize",
                                     "build the time reparametrization");
  std::string des_process, des_out = "psi.csv", des_format = "csv";
  double des_a = 0.0, des_b = 0.0;
  int des_nodes = 65;
  cmd_des->add_option("--process", des_process, "catalog name or file.json")
      ->required();
  cmd_des->add_option("--a", des_a, "window start")->required();
  cmd_des->add_option("--b", des_b, "window end")->required();
  cmd_des->add_option("--nodes", des_nodes, "grid nodes");
  cmd_des->add_option("--out", des_out, "output path");
  cmd_des->add_option("--format", des_format, "csv | svg-polyline");

  // ---- verify ----
  auto* cmd_ver = app.add_subcommand("verify", "run the verification suite");
  std::string ver_process, ver_suite = "all", ver_report = "report.json";
  double ver_a = 0.0, ver_b = 0.0;
  std::uint64_t ver_seed = 0;
  cmd_ver->add_option("--process", ver_process, "catalog name or file.json")
      ->required();
  auto* opt_a = cmd_ver->add_option("--a", ver_a, "window start");
  auto* opt_b = cmd_ver->add_option("--b", ver_b, "window end");
  cmd_ver->add_option("--suite", ver_suite, "theoremA | theoremB | lemmas | all");
  cmd_ver->add_option("--seed", ver_seed, "seed for random windows");
  cmd_ver->add_option("--report", ver_report, "report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    set_execution(serial ? Exec::serial : Exec::parallel);

    if (cmd_catalog->parsed()) {
      for (const CatalogEntry& e : catalog()) {
        std::printf("%-22s dim=%d window=[%g, %g] expected=%s%s\n",
                    e.name.c_str(), e.process.dim(), e.window_a, e.window_b,
                    to_string(e.expected_verdict),
                    e.counterexample ? " [counterexample]" : "");
        std::printf("    %s\n", e.summary.c_str());
      }
      return 0;
    }

    if (cmd_sim->parsed()) {
      std::string name;
      const SweepingProcess S = resolve_process(sim_process, &name, nullptr);
      const Vec x0 = parse_point(sim_x0);
      Orbit orbit;
      if (sim_refine) {
        orbit = refine_to_orbit(S, sim_t0, sim_t1, x0);
      } else {
        orbit = discretize_orbit(S, sim_t0, sim_t1, sim_steps, x0);
      }
      if (sim_format == "json") {
        std::string json = "{\"process\": \"" + name + "\", \"length\": " +
                           std::to_string(orbit.length) + ", \"steps\": " +
                           std::to_string(orbit.steps) + "}\n";
        write_file(sim_out, json);
      } else {
        std::vector<double> xs = orbit.times, ys;
        for (const Vec& p : orbit.points) ys.push_back(p[0]);
        emit_series(sim_out, sim_format, orbit_csv(S, orbit), xs, ys, "t",
                    "x1");
      }
      std::printf("orbit: %d steps, length %.12g, residual %.3g -> %s\n",
                  orbit.steps, orbit.length, orbit.residual, sim_out.c_str());
      return 0;
    }

    if (cmd_tal->parsed()) {
      const SweepingProcess S = resolve_process(tal_process, nullptr, nullptr);
      const TalwegTable table =
          tal_refined ? sample_talweg_refined(S, tal_a, tal_b, tal_nodes, tal_m)
                      : sample_talweg(S, tal_a, tal_b, tal_nodes, tal_m);
      emit_series(tal_out, tal_format, talweg_csv(table), table.grid,
                  table.phi_up, "t", "phi_up");
      std::printf("talweg: %zu nodes -> %s\n", table.size(), tal_out.c_str());
      return 0;
    }

    if (cmd_des->parsed()) {
      const SweepingProcess S = resolve_process(des_process, nullptr, nullptr);
      const DesingularizationMap map = build_map(S, des_a, des_b, des_nodes);
      std::vector<double> rs, psis;
      for (int i = 0; i < 257; ++i) {
        const double r = map.rho * i / 256.0;
        rs.push_back(r);
        psis.push_back(map.psi(r));
      }
      emit_series(des_out, des_format, psi_csv(map), rs, psis, "r", "psi");
      std::printf("desingularization: rho=%.12g -> %s\n", map.rho,
                  des_out.c_str());
      return 0;
    }

    if (cmd_ver->parsed()) {
      const CatalogEntry* entry = nullptr;
      std::string name;
      const SweepingProcess S = resolve_process(ver_process, &name, &entry);
      SuiteConfig config;
      config.seed = ver_seed;
      config.suite = ver_suite;
      const bool have_a = opt_a->count() > 0;
      const bool have_b = opt_b->count() > 0;
      VerificationReport report;
      if (entry && !have_a && !have_b) {
        report = run_suite(*entry, config);
      } else {
        const double a = have_a ? ver_a : (entry ? entry->window_a : 0.0);
        const double b = have_b ? ver_b : (entry ? entry->window_b : 1.0);
        if (entry) {
          config.counterexample = entry->counterexample;
          config.velocity_a = entry->velocity_a;
          config.velocity_b = entry->velocity_b;
          config.velocity_steps = entry->velocity_steps;
        }
        report = run_suite(S, a, b, config, name);
      }
      write_file(ver_report, report_json(report));
      for (const CheckResult& c : report.checks) {
        std::printf("%-15s %-14s measured=%.6g bound=%.6g tol=%.2g %s\n",
                    c.id.c_str(), to_string(c.status), c.measured, c.bound,
                    c.tolerance, c.note.c_str());
      }
      const std::string verdict =
          report.overall_pass ? std::string("ok")
                              : "FAIL: " + report.first_failure;
      std::printf("report -> %s (%s)\n", ver_report.c_str(), verdict.c_str());
      return report_exit_code(report);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
