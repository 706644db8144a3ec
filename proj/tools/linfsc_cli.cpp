// linfsc command-line tool.
//
//   linfsc fit      --input panel.csv --treated CA --t0 1988 [--penalty auto:linf]
//   linfsc tune     --input panel.csv --treated CA --t0 1988 --penalty auto:l1linf
//   linfsc effects  --input panel.csv --treated CA --t0 1988 --penalty linf --lambda 0.3
//   linfsc simulate --dgp 3 --error ar1 --b 200
//   linfsc run      --manifest out/manifest.json --out again/

#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "linfsc/error.hpp"
#include "linfsc/run.hpp"

namespace {

using linfsc::RunConfig;

void add_common(CLI::App* app, RunConfig& c) {
  app->add_option("--seed", c.seed, "Base seed for every random stream");
  app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  app->add_option("--out", c.output_dir, "Output directory");
  app->add_option("--emit", c.emit, "Output formats (json, csv)")->delimiter(',');
  app->add_option("--cv-k", c.cv_k, "Number of cross-validation folds");
  app->add_option_function<std::string>(
      "--cv-mode", [&c](const std::string& v) { c.cv_mode = linfsc::parse_cv_mode(v); },
      "Fold scheme: time or unit");
  app->add_option("--grid-lambdas", c.grid_lambdas, "Points in the lambda grid");
  app->add_option("--grid-alphas", c.grid_alphas, "Points in the alpha grid");
  app->add_option("--grid-epsilon", c.grid_epsilon, "lambda_min / lambda_max");
}

void add_data(CLI::App* app, RunConfig& c) {
  app->add_option("--input", c.input_path, "Wide panel CSV")->required();
  app->add_option("--treated", c.treated_column, "Column of the treated unit")->required();
  app->add_option("--t0", c.t0, "Last pre-treatment label or number of pre-periods")->required();
  app->add_option("--penalty", c.penalty,
                  "none, sc, lasso, ridge, elasticnet, linf, l1linf, or auto:<name>");
  app->add_option("--lambda", c.lambda, "Penalty level for a fixed penalty");
  app->add_option("--alpha", c.alpha, "Mixing weight for elasticnet and l1linf");
  add_common(app, c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized synthetic control estimators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "linfsc 0.1.0");

  RunConfig config;
  std::string manifest;
  std::string rerun_out = ".";
  int rerun_threads = 0;
  bool full_grid = false;

  std::map<CLI::App*, linfsc::Command> commands;
  auto* fit = app.add_subcommand("fit", "Fit synthetic control weights");
  auto* tune = app.add_subcommand("tune", "Cross-validate the penalty level");
  auto* effects = app.add_subcommand("effects", "Fit and report treatment effects");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo comparison of estimators");
  auto* rerun = app.add_subcommand("run", "Repeat a run from its manifest");
  commands = {{fit, linfsc::Command::Fit},
              {tune, linfsc::Command::Tune},
              {effects, linfsc::Command::Effects},
              {simulate, linfsc::Command::Simulate}};
  for (auto* sub : {fit, tune, effects}) add_data(sub, config);

  // simulate uses the reduced grid unless told otherwise
  RunConfig sim_defaults;
  sim_defaults.grid_lambdas = 20;
  sim_defaults.grid_alphas = 5;
  sim_defaults.cv_k = 5;
  add_common(simulate, config);
  simulate->add_option("--dgp", config.dgp, "Data generating process (1-4)")
      ->check(CLI::Range(1, 4));
  simulate->add_option_function<std::string>(
      "--error", [&config](const std::string& v) { config.error = linfsc::parse_error_kind(v); },
      "iid, ar1 or arma11");
  simulate->add_option("--b", config.b, "Monte Carlo replications");
  simulate->add_option("--horizons", config.horizons, "Post-period horizons")->delimiter(',');
  simulate->add_option("--methods", config.methods, "Estimators to compare")->delimiter(',');
  simulate->add_option("--j", config.sim_j, "Number of control units");
  simulate->add_option("--sim-t0", config.sim_t0, "Pre-treatment periods");
  simulate->add_option("--t1", config.sim_t1, "Post-treatment periods");
  simulate->add_option("--delta", config.delta, "True treatment effect");
  simulate->add_option_function<std::string>(
      "--horizon-reading",
      [&config](const std::string& v) {
        if (v == "cumulative") config.reading = linfsc::HorizonReading::Cumulative;
        else if (v == "single") config.reading = linfsc::HorizonReading::SinglePeriod;
        else throw CLI::ValidationError("--horizon-reading", "expected cumulative or single");
      },
      "cumulative or single");
  simulate->add_flag("--full-grid", full_grid, "Use the 100 x 11 grid with 10 folds");

  rerun->add_option("--manifest", manifest, "manifest.json from an earlier run")->required();
  rerun->add_option("--out", rerun_out, "Output directory");
  rerun->add_option("--threads", rerun_threads, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const linfsc::Error& e) {
    std::cerr << e.what() << '\n';
    return static_cast<int>(e.category());
  }

  if (rerun->parsed()) {
    RunConfig replay;
    try {
      replay = linfsc::load_manifest(manifest);
    } catch (const linfsc::Error& e) {
      std::cerr << e.what() << '\n';
      return static_cast<int>(e.category());
    }
    replay.output_dir = rerun_out;
    replay.threads = rerun_threads;
    return linfsc::run(replay, std::cerr);
  }

  for (const auto& [sub, command] : commands) {
    if (!sub->parsed()) continue;
    config.command = command;
    if (command == linfsc::Command::Simulate) {
      if (full_grid) {
        config.grid_lambdas = 100;
        config.grid_alphas = 11;
        config.cv_k = 10;
      } else {
        if (sub->count("--grid-lambdas") == 0) config.grid_lambdas = sim_defaults.grid_lambdas;
        if (sub->count("--grid-alphas") == 0) config.grid_alphas = sim_defaults.grid_alphas;
        if (sub->count("--cv-k") == 0) config.cv_k = sim_defaults.cv_k;
      }
    }
  }
  return linfsc::run(config, std::cerr);
}
