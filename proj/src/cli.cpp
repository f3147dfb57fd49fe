#include "rejuv/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rejuv/config.hpp"
#include "rejuv/report.hpp"
#include "rejuv/sim.hpp"

namespace rejuv::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int run_design(const std::string& config_path) {
  const RunConfig cfg = load_config(config_path);
  const Design d = build_design(cfg.design_inputs());
  write_report({d, std::nullopt, std::nullopt}, cfg.outputs.design_report);
  std::cout << "design report written to " << cfg.outputs.design_report
            << " (log det P^-1 = " << fmt17(d.log_det_p_inv) << ")\n";
  return 0;
}

int run_verify(const std::string& config_path, double tuc_override,
               bool max_tuc, double tuc_hi, double tuc_tol) {
  const RunConfig cfg = load_config(config_path);
  const Design d = build_design(cfg.design_inputs());
  const VerifyOptions opts = cfg.verify_options(d);
  const double t_uc = tuc_override > 0.0 ? tuc_override : cfg.timing.t_uc;

  DesignReport report{d, std::nullopt, std::nullopt};
  report.verify =
      verify_tuc(d.a, d.b, d.input_set, d.c_sc(), d.e_c(), t_uc, opts);
  const TucReport& v = *report.verify;
  std::cout << "verify: T_UC=" << fmt17(t_uc) << " pass="
            << (v.pass ? "true" : "false") << " margin=" << fmt17(v.margin)
            << " settle_time=" << fmt17(v.settle_time) << "\n";

  if (max_tuc) {
    const double hi = tuc_hi > 0.0 ? tuc_hi : 10.0 * t_uc;
    // The bisection re-verifies many times; skip the settle measurement.
    VerifyOptions fast = opts;
    fast.a_sc = Mat();
    report.max_tuc = find_max_tuc(d.a, d.b, d.input_set, d.c_sc(), d.e_c(),
                                  t_uc, hi, tuc_tol, fast);
    std::cout << "max certified T_UC in [" << fmt17(*report.max_tuc) << ", "
              << fmt17(*report.max_tuc + tuc_tol) << ")\n";
  }

  write_report(report, cfg.outputs.design_report);
  return 0;
}

int run_simulate(const std::string& config_path, bool force,
                 std::uint64_t seed_override, bool seed_given) {
  RunConfig cfg = load_config(config_path);
  if (seed_given) cfg.seed = seed_override;

  if (!fs::exists(cfg.outputs.design_report)) {
    throw Error("design report '" + cfg.outputs.design_report +
                "' not found; run `design` and `verify` first");
  }
  const DesignReport report = read_report(cfg.outputs.design_report);
  if (!force) {
    if (!report.verify) {
      throw Error("design report has no certification; run `verify` first or pass --force");
    }
    if (!report.verify->pass) {
      throw Error("design certification failed; fix the design or pass --force");
    }
  }

  const Scenario scenario = cfg.scenario();
  const Trace tr = run_scenario(scenario, report.design);

  {
    std::ofstream out(cfg.outputs.trace_csv);
    if (!out) throw Error("cannot write '" + cfg.outputs.trace_csv + "'");
    write_trace_csv(tr, scenario.quad, out);
  }
  {
    std::ofstream out(cfg.outputs.events_jsonl);
    if (!out) throw Error("cannot write '" + cfg.outputs.events_jsonl + "'");
    write_events_jsonl(tr, out);
  }

  const double v_goal = [&] {
    const Vec d = tr.final_state - equilibrium_state(scenario.goal);
    return d.dot(report.design.p * d);
  }();
  std::cout << "simulate: steps=" << tr.records.size()
            << " completed=" << (tr.completed ? "true" : "false")
            << " final_V_goal=" << fmt17(v_goal)
            << (tr.faulted ? " FAULT: " + tr.fault_detail : "") << "\n";
  std::cout << "trace written to " << cfg.outputs.trace_csv << "\n";
  return 0;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

int run_export_plots(const std::string& config_path) {
  const RunConfig cfg = load_config(config_path);
  if (!fs::exists(cfg.outputs.design_report)) {
    throw ConfigError("design report '" + cfg.outputs.design_report +
                      "' not found; run `verify` first");
  }
  if (!fs::exists(cfg.outputs.trace_csv)) {
    throw ConfigError("trace '" + cfg.outputs.trace_csv +
                      "' not found; run `simulate` first");
  }
  const DesignReport report = read_report(cfg.outputs.design_report);
  if (!report.verify) {
    throw ConfigError("design report has no certification section");
  }
  const Design& d = report.design;

  fs::create_directories(cfg.outputs.plots_dir);
  const auto plot_path = [&](const std::string& name) {
    return (fs::path(cfg.outputs.plots_dir) / name).string();
  };

  {
    std::ofstream out(plot_path("margins.csv"));
    out << "t,max_v,margin\n";
    for (const TucGridEntry& g : report.verify->grid) {
      out << fmt17(g.t) << ',' << fmt17(g.max_v) << ',' << fmt17(1.0 - g.max_v)
          << '\n';
    }
  }

  const std::vector<State> refs =
      generate_references(cfg.start, cfg.goal, cfg.step_length);
  const ReachOverApprox reach =
      reach_overapprox(d.a, d.b, d.input_set, d.c_sc(), report.verify->t_uc);
  const auto rows = parse_csv(cfg.outputs.trace_csv);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "t") {
    throw Error("trace file has an unexpected header");
  }

  for (const auto& [na, nb] : cfg.outputs.plot_planes) {
    const int ia = state_index_from_name(na);
    const int ib = state_index_from_name(nb);
    const std::string suffix = na + "_" + nb + ".csv";

    {
      std::ofstream out(plot_path("ellipses_" + suffix));
      out << "set,ref_id," << na << ',' << nb << '\n';
      const struct { const char* name; double level; } levels[] = {
          {"E_C", 1.0}, {"E_SC", d.eps_sc}, {"E_TC", d.eps_tc}};
      for (const auto& lv : levels) {
        for (std::size_t r = 0; r < refs.size(); ++r) {
          for (const Eigen::Vector2d& pt :
               project_ellipsoid(d.p, lv.level, ia, ib)) {
            out << lv.name << ',' << r << ',' << fmt17(pt(0) + refs[r](ia))
                << ',' << fmt17(pt(1) + refs[r](ib)) << '\n';
          }
        }
      }
    }
    {
      std::ofstream out(plot_path("reach_" + suffix));
      out << na << ',' << nb << '\n';
      for (const Vec& v : reach.vertices) {
        out << fmt17(v(ia)) << ',' << fmt17(v(ib)) << '\n';
      }
    }
    {
      std::ofstream out(plot_path("trace_" + suffix));
      out << "t," << na << ',' << nb << '\n';
      for (std::size_t r = 1; r < rows.size(); ++r) {
        out << rows[r][0] << ',' << rows[r][1 + ia] << ',' << rows[r][1 + ib]
            << '\n';
      }
    }
  }
  std::cout << "plot data written to " << cfg.outputs.plots_dir << "\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& argv) {
  CLI::App app{"software-rejuvenation tracking control: design, certification and simulation"};
  app.require_subcommand(1);

  std::string config_path;
  double tuc_override = -1.0;
  bool max_tuc = false;
  double tuc_hi = -1.0;
  double tuc_tol = 1e-3;
  bool force = false;
  std::uint64_t seed = 0;

  auto* design = app.add_subcommand("design", "compute gains and safe sets");
  design->add_option("--config", config_path, "config file")->required();

  auto* verify = app.add_subcommand("verify", "certify the rejuvenation period");
  verify->add_option("--config", config_path, "config file")->required();
  verify->add_option("--tuc", tuc_override, "override T_UC [s]");
  verify->add_flag("--max-tuc", max_tuc, "bisection for the largest certified T_UC");
  verify->add_option("--tuc-hi", tuc_hi, "bisection upper bracket [s]");
  verify->add_option("--tuc-tol", tuc_tol, "bisection tolerance [s]");

  auto* simulate = app.add_subcommand("simulate", "run the closed-loop scenario");
  simulate->add_option("--config", config_path, "config file")->required();
  simulate->add_flag("--force", force, "run even without a passing certification");
  auto* seed_opt = simulate->add_option("--seed", seed, "override the scenario seed");

  auto* plots = app.add_subcommand("export-plots", "emit projection CSVs");
  plots->add_option("--config", config_path, "config file")->required();

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      return app.exit(e);
    }
    app.exit(e);
    return 2;
  }

  try {
    if (design->parsed()) return run_design(config_path);
    if (verify->parsed()) {
      return run_verify(config_path, tuc_override, max_tuc, tuc_hi, tuc_tol);
    }
    if (simulate->parsed()) {
      return run_simulate(config_path, force, seed, seed_opt->count() > 0);
    }
    if (plots->parsed()) return run_export_plots(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace rejuv::cli
