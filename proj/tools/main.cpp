#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "dolbeault/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Twisted Dolbeault and Dirac spectra on flat tori"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all");

  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  const std::map<std::string, std::string> help{
      {"degree", "first Chern number, comma list per factor"},
      {"area", "factor area, comma list"},
      {"modulus", "lattice modulus tau, e.g. i or 0.5+1.2i, comma list"},
      {"grid", "sites per dimension for spectrum"},
      {"grids", "comma list of sites per dimension"},
      {"perturb-profile", "none | cos | random"},
      {"perturb-amplitude", "curvature perturbation amplitude"},
      {"k", "eigenpairs (Dirac: +- pairs)"},
      {"tol", "relative residual tolerance"},
      {"seed", "solver and profile seed"},
      {"max-iter", "Lanczos iteration budget"},
      {"quantity", "convergence: lambda1 | twistor | weitzenbock | dirac"},
      {"modes", "Laplacian modes spanning the Weitzenbock subspace"},
      {"kronecker-grid", "grid for the product Kronecker check, 0 = off"},
      {"save-connection", "spectrum: write the connection as JSON"},
      {"load-connection", "spectrum: read the connection from JSON"},
      {"out", "report path (default stdout)"},
      {"format", "json | csv"},
  };

  for (const char* name : {"spectrum", "verify-bound", "dirac", "product", "convergence"}) {
    auto* sub = app.add_subcommand(name, std::string("run ") + name);
    sub->add_option("--config", config_path, "key = value file; flags override it");
    for (const auto& [key, text] : help) {
      auto* opt = sub->add_option("--" + key, values[key], text);
      options[std::string(name) + "/" + key] = opt;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dolbeault::kExitConfig;
  }

  const auto* sub = app.get_subcommands().front();
  dolbeault::KeyValues flags{{"command", sub->get_name()}};
  for (const auto& [key, text] : help)
    if (options[sub->get_name() + "/" + key]->count() > 0) flags[key] = values[key];

  const auto outcome = dolbeault::run_from_key_values(config_path, flags);
  if (!outcome.report.empty()) std::cout << outcome.report;
  if (outcome.exit_code != dolbeault::kExitOk || outcome.message != "OK") std::cerr << outcome.message << "\n";
  return outcome.exit_code;
}
