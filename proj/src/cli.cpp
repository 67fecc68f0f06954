#include "dolbeault/cli.hpp"

#include <fstream>
#include <sstream>

#include "dolbeault/errors.hpp"
#include "dolbeault/pipeline.hpp"
#include "dolbeault/report.hpp"

namespace dolbeault {

namespace {

std::string read_text(const std::string& path, const char* key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(std::string(key) + ": cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text, const char* key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(std::string(key) + ": cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError(std::string(key) + ": write to '" + path + "' failed");
}

CommandOutcome finish(const RunConfig& cfg, Json body, const std::string& csv, int code, std::string message) {
  CommandOutcome o;
  o.exit_code = code;
  o.message = std::move(message);
  if (cfg.format == "csv") {
    o.report = csv;
  } else {
    Json j = report_header(cfg);
    for (auto& [k, v] : body.items()) j[k] = v;
    j["exit_code"] = code;
    o.report = dump_json(j);
  }
  return o;
}

CommandOutcome not_converged(const RunConfig& cfg, int grid) {
  Json body{{"converged", false}, {"failed_grid", grid}};
  return finish(cfg, body, "N,value,extrapolated\n", kExitNotConverged,
                "eigensolver did not converge at grid " + std::to_string(grid));
}

CommandOutcome cmd_spectrum(const RunConfig& cfg) {
  const auto p = make_problem(cfg);
  const auto opt = make_solve_options(cfg);
  const auto grid = make_grid(cfg.grid, p.geom);
  ConnectionField conn;
  if (!cfg.load_connection.empty()) {
    conn = connection_from_json(read_text(cfg.load_connection, "load-connection"), p.geom);
    const auto& f = conn.factor(0);
    if (f.sites_per_dim != cfg.grid)
      throw ValidationError("load-connection: file holds grid " + std::to_string(f.sites_per_dim) + ", config has " +
                            std::to_string(cfg.grid));
    if (f.degree != p.spec.degrees[0])
      throw ValidationError("load-connection: file holds degree " + std::to_string(f.degree) + ", config has " +
                            std::to_string(p.spec.degrees[0]));
  } else {
    conn = build_connection(p, grid);
  }
  if (!cfg.save_connection.empty())
    write_text(cfg.save_connection, connection_to_json(conn, p.geom), "save-connection");

  const auto run = run_spectrum(p, cfg.grid, opt, &conn);
  Json body{{"grid", run.sites_per_dim},
            {"f_max", run.f_max},
            {"kernel_threshold", run.kernel_threshold},
            {"kernel_dim", run.kernel_dim},
            {"spectrum", eigen_summary(run.spectrum)}};
  std::vector<std::pair<int, double>> rows;
  for (double e : run.spectrum.eigenvalues) rows.emplace_back(run.sites_per_dim, e);
  const int code = run.spectrum.converged ? kExitOk : kExitNotConverged;
  return finish(cfg, body, csv_rows(rows, nullptr), code,
                run.spectrum.converged ? "OK" : "eigensolver did not converge");
}

CommandOutcome cmd_verify_bound(const RunConfig& cfg) {
  const auto p = make_problem(cfg);
  const auto sweep = run_bound_sweep(p, cfg.grids, make_solve_options(cfg));
  if (!sweep.converged) return not_converged(cfg, sweep.failed_grid);
  Json grids = Json::array();
  std::vector<std::pair<int, double>> rows;
  for (const auto& r : sweep.per_grid) {
    grids.push_back(to_json(r));
    rows.emplace_back(r.sites_per_dim, r.lambda_1);
  }
  Json body{{"converged", true}, {"grids", grids}};
  if (sweep.lambda_study) body["lambda_study"] = to_json(*sweep.lambda_study);
  if (sweep.rho_study) body["rho_study"] = to_json(*sweep.rho_study);
  body["report"] = to_json(sweep.combined);
  const bool pass = sweep.combined.pass;
  return finish(cfg, body, csv_rows(rows, sweep.lambda_study ? &*sweep.lambda_study : nullptr),
                pass ? kExitOk : kExitFail, pass ? "PASS" : "FAIL");
}

CommandOutcome cmd_dirac(const RunConfig& cfg) {
  const auto p = make_problem(cfg);
  const auto sweep = run_dirac_sweep(p, cfg.grids, make_solve_options(cfg));
  if (!sweep.converged) return not_converged(cfg, sweep.failed_grid);
  Json grids = Json::array();
  std::vector<std::pair<int, double>> rows;
  for (std::size_t i = 0; i < sweep.per_grid.size(); ++i) {
    Json g = to_json(sweep.per_grid[i]);
    g["mu"] = sweep.mu[i];
    grids.push_back(g);
    rows.emplace_back(sweep.per_grid[i].sites_per_dim, sweep.per_grid[i].min_abs_mu);
  }
  Json body{{"converged", true}, {"grids", grids}};
  if (sweep.mu_study) body["mu_study"] = to_json(*sweep.mu_study);
  body["report"] = to_json(sweep.combined);
  const bool pass = sweep.combined.pass;
  return finish(cfg, body, csv_rows(rows, sweep.mu_study ? &*sweep.mu_study : nullptr), pass ? kExitOk : kExitFail,
                pass ? "PASS" : "FAIL");
}

CommandOutcome cmd_product(const RunConfig& cfg) {
  const auto p = make_problem(cfg);
  const auto sweep = run_product_sweep(p, cfg.grids, make_solve_options(cfg), cfg.kronecker_grid);
  if (!sweep.converged) return not_converged(cfg, sweep.failed_grid);
  Json grids = Json::array();
  std::vector<std::pair<int, double>> rows;
  for (const auto& g : sweep.per_grid) {
    grids.push_back(Json{{"grid", g.sites_per_dim},
                         {"factor_lambda", {g.factor_lambda[0], g.factor_lambda[1]}},
                         {"lambda_1", g.lambda_1},
                         {"kernel_dim", g.kernel_dim},
                         {"twistor_rho", g.twistor_rho},
                         {"f_max", g.f_max},
                         {"bound", g.bound},
                         {"margin", g.margin},
                         {"spectrum", eigen_summary(g.spectrum)}});
    rows.emplace_back(g.sites_per_dim, g.lambda_1);
  }
  Json body{{"converged", true}, {"grids", grids}};
  if (sweep.lambda_study) body["lambda_study"] = to_json(*sweep.lambda_study);
  if (sweep.rho_study) body["rho_study"] = to_json(*sweep.rho_study);
  bool kron_ok = true;
  if (sweep.kronecker_grid > 0) {
    kron_ok = sweep.kronecker_defect <= 1e-10;
    body["kronecker"] = Json{{"grid", sweep.kronecker_grid}, {"max_defect", sweep.kronecker_defect}, {"ok", kron_ok}};
  }
  body["report"] = to_json(sweep.combined);
  const bool pass = sweep.combined.pass && kron_ok;
  return finish(cfg, body, csv_rows(rows, sweep.lambda_study ? &*sweep.lambda_study : nullptr),
                pass ? kExitOk : kExitFail, pass ? "PASS" : "FAIL");
}

CommandOutcome cmd_convergence(const RunConfig& cfg) {
  const auto p = make_problem(cfg);
  const auto opt = make_solve_options(cfg);
  std::vector<double> values;
  if (cfg.quantity == "lambda1" || cfg.quantity == "twistor") {
    const auto sweep = run_bound_sweep(p, cfg.grids, opt);
    if (!sweep.converged) return not_converged(cfg, sweep.failed_grid);
    for (const auto& r : sweep.per_grid) values.push_back(cfg.quantity == "lambda1" ? r.lambda_1 : r.twistor_rho);
  } else if (cfg.quantity == "dirac") {
    const auto sweep = run_dirac_sweep(p, cfg.grids, opt);
    if (!sweep.converged) return not_converged(cfg, sweep.failed_grid);
    for (const auto& r : sweep.per_grid) values.push_back(r.min_abs_mu);
  } else {
    for (int n : cfg.grids) {
      bool ok = true;
      values.push_back(weitzenbock_at(p, n, opt, cfg.modes, &ok));
      if (!ok) return not_converged(cfg, n);
    }
  }
  const auto study = analyze_convergence(cfg.grids, values);
  std::vector<std::pair<int, double>> rows;
  for (std::size_t i = 0; i < values.size(); ++i) rows.emplace_back(cfg.grids[i], values[i]);
  Json body{{"converged", true}, {"quantity", cfg.quantity}, {"study", to_json(study)}};
  return finish(cfg, body, csv_rows(rows, &study), kExitOk, "OK (" + study.status + ")");
}

}  // namespace

CommandOutcome run_command(const RunConfig& cfg) {
  try {
    if (cfg.command == "spectrum") return cmd_spectrum(cfg);
    if (cfg.command == "verify-bound") return cmd_verify_bound(cfg);
    if (cfg.command == "dirac") return cmd_dirac(cfg);
    if (cfg.command == "product") return cmd_product(cfg);
    if (cfg.command == "convergence") return cmd_convergence(cfg);
    return {kExitConfig, "", "command: unknown '" + cfg.command + "'"};
  } catch (const ValidationError& e) {
    return {kExitConfig, "", e.what()};
  } catch (const InsufficientInputError& e) {
    return {kExitConfig, "", e.what()};
  } catch (const ConsistencyError& e) {
    return {kExitNotConverged, "", e.what()};
  }
}

CommandOutcome run_from_key_values(const std::string& config_path, const KeyValues& flags) {
  RunConfig cfg;
  try {
    KeyValues kv = config_path.empty() ? KeyValues{} : read_config_file(config_path);
    cfg = make_run_config(merge_key_values(std::move(kv), flags));
  } catch (const ValidationError& e) {
    return {kExitConfig, "", e.what()};
  }
  auto outcome = run_command(cfg);
  if (!cfg.out.empty() && !outcome.report.empty()) {
    try {
      write_text(cfg.out, outcome.report, "out");
      outcome.report.clear();
    } catch (const ValidationError& e) {
      return {kExitConfig, "", e.what()};
    }
  }
  return outcome;
}

}  // namespace dolbeault
