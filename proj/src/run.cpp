#include "linfsc/run.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "linfsc/effects.hpp"
#include "linfsc/error.hpp"
#include "linfsc/io.hpp"
#include "linfsc/penalty.hpp"

namespace linfsc {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::ConfigError, what);
}

struct PenaltyChoice {
  PenaltyKind kind;
  bool tune;
};

PenaltyChoice parse_penalty(const std::string& text) {
  constexpr std::string_view prefix = "auto:";
  if (text.rfind(prefix, 0) == 0) return {parse_penalty_kind(text.substr(prefix.size())), true};
  return {parse_penalty_kind(text), false};
}

std::string_view to_string(HorizonReading reading) {
  return reading == HorizonReading::Cumulative ? "cumulative" : "single";
}

HorizonReading parse_reading(const std::string& text) {
  if (text == "cumulative") return HorizonReading::Cumulative;
  if (text == "single") return HorizonReading::SinglePeriod;
  config_error("horizon_reading must be 'cumulative' or 'single'");
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path.string() + "'");
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

bool emits(const RunConfig& c, const char* kind) { return c.emit.count(kind) > 0; }

struct FitOutcome {
  WeightFit fit;
  std::optional<CvResult> cv;
};

FitOutcome fit_from_config(const RunConfig& config, const PanelData& panel) {
  const PenaltyChoice choice = parse_penalty(config.penalty);
  SolverSettings settings;
  if (!choice.tune || !uses_lambda(choice.kind)) {
    PenaltySpec spec = PenaltySpec::make(choice.kind, config.lambda.value_or(0.0),
                                         config.alpha.value_or(1.0));
    return {fit_weights(panel, spec, settings), std::nullopt};
  }
  const bool intercept = true;
  const CenteredDesign design = center_design(panel, intercept);
  const LambdaGrid lambdas = lambda_grid(design, config.grid_lambdas, config.grid_epsilon);
  const TuningGrid grid = TuningGrid::make(lambdas.values, alpha_grid(config.grid_alphas));
  CvOptions options;
  const Index cap = config.cv_mode == CvMode::TimeFolds ? panel.t0() : panel.J();
  options.k = static_cast<int>(std::min<Index>(config.cv_k, cap));
  options.mode = config.cv_mode;
  options.seed = substream_seed(config.seed, "cv", 0);
  options.settings = settings;
  options.threads = config.threads;
  CvResult cv = cross_validate(panel, choice.kind, grid, options);
  WeightFit fit = solve_penalized(
      design, PenaltySpec::make(choice.kind, cv.best_lambda, cv.best_alpha), settings);
  return {std::move(fit), std::move(cv)};
}

json weights_json(const PanelData& panel, const FitOutcome& outcome) {
  const WeightFit& fit = outcome.fit;
  json units = json::object();
  for (Index j = 0; j < panel.J(); ++j) {
    units[panel.unit_labels()[static_cast<size_t>(j + 1)]] = fit.omega_hat[j];
  }
  const PenaltySpec& p = fit.penalty;
  json out;
  out["treated"] = panel.unit_labels().front();
  out["penalty"] = std::string(to_string(p.kind));
  out["lambda"] = uses_lambda(p.kind) ? json(p.lambda) : json(nullptr);
  out["alpha"] = uses_alpha(p.kind) ? json(p.alpha) : json(nullptr);
  out["tuned"] = outcome.cv.has_value();
  out["fit_intercept"] = p.fit_intercept;
  out["mu_hat"] = fit.mu_hat;
  out["pre_rmse"] = fit.pre_rmse;
  out["linf_norm"] = fit.omega_hat.size() ? fit.omega_hat.lpNorm<Eigen::Infinity>() : 0.0;
  out["weight_sum"] = fit.omega_hat.sum();
  out["t0"] = panel.t0();
  out["short_pre_period"] = fit.short_pre_period;
  out["weights"] = std::move(units);
  if (fit.solver_report) {
    out["solver"] = {{"status", std::string(to_string(fit.solver_report->status))},
                     {"objective", fit.solver_report->objective},
                     {"gap_bound", fit.solver_report->gap_bound},
                     {"outer_iters", fit.solver_report->outer_iters},
                     {"newton_iters", fit.solver_report->newton_iters}};
  }
  return out;
}

std::string surface_csv(const CvResult& cv) {
  std::ostringstream out;
  out << "lambda,alpha,rmse\n";
  for (size_t li = 0; li < cv.lambdas.size(); ++li) {
    for (size_t ai = 0; ai < cv.alphas.size(); ++ai) {
      out << format_double(cv.lambdas[li]) << ',' << format_double(cv.alphas[ai]) << ','
          << format_double(cv.rmse_surface(static_cast<Index>(li), static_cast<Index>(ai)))
          << '\n';
    }
  }
  return out.str();
}

json cv_json(const CvResult& cv) {
  return json{{"mode", std::string(to_string(cv.mode))},
              {"seed", cv.seed},
              {"best_lambda", cv.best_lambda},
              {"best_alpha", cv.best_alpha},
              {"best_rmse", cv.rmse_surface(cv.best_lambda_index, cv.best_alpha_index)},
              {"failed_cells", cv.failed_cells},
              {"fold_assignments", cv.fold_assignments}};
}

ExperimentConfig experiment_from(const RunConfig& c) {
  ExperimentConfig e;
  e.spec.dgp = parse_dgp(c.dgp);
  e.spec.j = c.sim_j;
  e.spec.t0 = c.sim_t0;
  e.spec.t1 = c.sim_t1;
  e.spec.delta = c.delta;
  e.spec.error.kind = c.error;
  e.spec.seed = c.seed;
  e.methods.clear();
  for (const auto& m : c.methods) e.methods.push_back(parse_method(m));
  e.b = c.b;
  e.horizons = c.horizons;
  e.tuning = TuningConfig{c.grid_lambdas, c.grid_alphas, c.cv_k, c.grid_epsilon, c.cv_mode};
  e.reading = c.reading;
  e.threads = c.threads;
  return e;
}

json dgp_json(const DgpSpec& s) {
  return json{{"dgp", static_cast<int>(s.dgp)},
              {"j", s.j},
              {"t0", s.t0},
              {"t1", s.t1},
              {"delta", s.delta},
              {"error",
               {{"kind", std::string(to_string(s.error.kind))},
                {"rho", s.error.rho},
                {"theta", s.error.theta},
                {"u_sd", s.error.u_sd},
                {"eps_scale", s.error.eps_scale},
                {"burn_in", s.error.burn_in}}},
              {"seed", s.seed}};
}

void write_manifest(const RunConfig& config, json extra) {
  json manifest;
  manifest["tool"] = "linfsc";
  manifest["version"] = kVersion;
  manifest["config"] = json::parse(config_to_json(config));
  for (auto& [key, value] : extra.items()) manifest[key] = value;
  write_text(std::filesystem::path(config.output_dir) / "manifest.json", dump(manifest));
}

void run_data_command(const RunConfig& config) {
  const PanelData panel = ingest_csv(*config.input_path, config.treated_column, Cutover{config.t0});
  const std::filesystem::path dir(config.output_dir);

  if (config.command == Command::Tune) {
    const PenaltyChoice choice = parse_penalty(config.penalty);
    const CenteredDesign design = center_design(panel, true);
    const LambdaGrid lambdas = lambda_grid(design, config.grid_lambdas, config.grid_epsilon);
    const TuningGrid grid = TuningGrid::make(lambdas.values, alpha_grid(config.grid_alphas));
    CvOptions options;
    const Index cap = config.cv_mode == CvMode::TimeFolds ? panel.t0() : panel.J();
    options.k = static_cast<int>(std::min<Index>(config.cv_k, cap));
    options.mode = config.cv_mode;
    options.seed = substream_seed(config.seed, "cv", 0);
    options.threads = config.threads;
    const CvResult cv = cross_validate(panel, choice.kind, grid, options);
    if (emits(config, "csv")) write_text(dir / "cv_surface.csv", surface_csv(cv));
    if (emits(config, "json")) write_text(dir / "cv_best.json", dump(cv_json(cv)));
    write_manifest(config, json{{"cv_seed", options.seed}});
    return;
  }

  const FitOutcome outcome = fit_from_config(config, panel);
  if (emits(config, "json")) write_text(dir / "weights.json", dump(weights_json(panel, outcome)));
  json extra = json::object();
  if (outcome.cv) extra["cv"] = cv_json(*outcome.cv);

  if (config.command == Command::Effects) {
    const EffectSeries effects = dynamic_effects(panel, outcome.fit);
    const Vector pre_gap = pre_fit_gap(panel, outcome.fit);
    if (emits(config, "csv")) {
      std::ostringstream csv;
      csv << "time,actual,counterfactual,gap\n";
      for (Index t = 0; t < panel.T(); ++t) {
        const double actual = panel.treated()[t];
        const bool pre = t < panel.t0();
        const double gap = pre ? pre_gap[t] : effects.dynamic_effects[t - panel.t0()];
        const double counterfactual = pre ? actual - gap : effects.counterfactual[t - panel.t0()];
        csv << panel.time_labels()[static_cast<size_t>(t)] << ',' << format_double(actual) << ','
            << format_double(counterfactual) << ',' << format_double(gap) << '\n';
      }
      write_text(dir / "effects.csv", csv.str());
    }
    if (emits(config, "json")) {
      json horizons = json::object();
      for (const auto& [h, v] : effects.horizon_ates) horizons[std::to_string(h)] = v;
      json ate{{"ate", effects.ate},
               {"t0", panel.t0()},
               {"t1", panel.t1()},
               {"first_post_period", panel.time_labels()[static_cast<size_t>(panel.t0())]},
               {"horizon_ates", std::move(horizons)}};
      write_text(dir / "ate.json", dump(ate));
    }
  }
  write_manifest(config, std::move(extra));
}

void run_simulate(const RunConfig& config) {
  const ExperimentConfig experiment = experiment_from(config);
  const RmseTable table = run_experiment(experiment);
  const std::filesystem::path dir(config.output_dir);
  if (emits(config, "csv")) {
    std::ostringstream csv;
    csv << "dgp,method,horizon,rmse\n";
    for (const auto& row : table.rows) {
      csv << config.dgp << ',' << to_string(row.method) << ',' << row.horizon << ','
          << format_double(row.rmse) << '\n';
    }
    write_text(dir / "rmse_table.csv", csv.str());
  }
  json failures = json::object();
  for (const auto& [method, count] : table.failures) failures[std::string(to_string(method))] = count;
  if (emits(config, "json")) {
    json rows = json::array();
    for (const auto& row : table.rows) {
      rows.push_back({{"method", std::string(to_string(row.method))},
                      {"horizon", row.horizon},
                      {"rmse", row.rmse},
                      {"replicates", row.replicates}});
    }
    write_text(dir / "rmse_table.json",
               dump(json{{"b", table.b},
                         {"skipped_replicates", table.skipped_replicates},
                         {"failures", failures},
                         {"rows", std::move(rows)}}));
  }
  std::vector<std::uint64_t> replicate_seeds;
  for (int r = 0; r < config.b; ++r) {
    replicate_seeds.push_back(substream_seed(config.seed, "simulate", static_cast<std::uint64_t>(r)));
  }
  write_manifest(config, json{{"dgp_spec", dgp_json(experiment.spec)},
                              {"replicate_seeds", std::move(replicate_seeds)},
                              {"failures", failures}});
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::Fit: return "fit";
    case Command::Tune: return "tune";
    case Command::Effects: return "effects";
    case Command::Simulate: return "simulate";
  }
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (auto c : {Command::Fit, Command::Tune, Command::Effects, Command::Simulate}) {
    if (name == to_string(c)) return c;
  }
  config_error("unknown command '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  if (command != Command::Simulate) {
    if (!input_path || input_path->empty()) config_error("--input is required");
    if (treated_column.empty()) config_error("--treated is required");
    if (t0.empty()) config_error("--t0 is required");
    const PenaltyChoice choice = parse_penalty(penalty);
    if (command == Command::Tune && !choice.tune) {
      config_error("tune needs an 'auto:<kind>' penalty");
    }
    if (!choice.tune) {
      if (uses_lambda(choice.kind) && !lambda) config_error("--lambda is required for a fixed penalty");
      if (uses_alpha(choice.kind) && !alpha) config_error("--alpha is required for this penalty");
      PenaltySpec::make(choice.kind, lambda.value_or(0.0), alpha.value_or(1.0));
    }
  } else {
    parse_dgp(dgp);
    if (b < 1) config_error("--b must be positive");
    if (methods.empty()) config_error("--methods must name at least one method");
    for (const auto& m : methods) parse_method(m);
    if (sim_j < 1 || sim_t0 < 2 || sim_t1 < 1) config_error("simulation dimensions must be positive");
    if (dgp == 4 && sim_j % 2 != 0) config_error("DGP 4 needs an even number of controls");
    for (Index h : horizons) {
      if (h < 1 || h > sim_t1) config_error("horizons must lie in [1, t1]");
    }
  }
  if (cv_k < 2) config_error("--cv-k must be at least 2");
  if (grid_lambdas < 2) config_error("--grid-lambdas must be at least 2");
  if (grid_alphas < 1) config_error("--grid-alphas must be at least 1");
  if (!(grid_epsilon > 0.0 && grid_epsilon < 1.0)) config_error("grid epsilon must lie in (0, 1)");
  if (emit.empty()) config_error("--emit needs at least one of json, csv");
  for (const auto& e : emit) {
    if (e != "json" && e != "csv") config_error("--emit accepts json and csv only");
  }
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["command"] = std::string(to_string(c.command));
  if (c.command != Command::Simulate) {
    j["input"] = c.input_path ? json(*c.input_path) : json(nullptr);
    j["treated"] = c.treated_column;
    j["t0"] = c.t0;
    j["penalty"] = c.penalty;
    j["lambda"] = number_or_null(c.lambda);
    j["alpha"] = number_or_null(c.alpha);
  } else {
    j["dgp"] = c.dgp;
    j["error"] = std::string(to_string(c.error));
    j["b"] = c.b;
    j["horizons"] = c.horizons;
    j["methods"] = c.methods;
    j["j"] = c.sim_j;
    j["sim_t0"] = c.sim_t0;
    j["t1"] = c.sim_t1;
    j["delta"] = c.delta;
    j["horizon_reading"] = std::string(to_string(c.reading));
  }
  j["cv_k"] = c.cv_k;
  j["cv_mode"] = std::string(to_string(c.cv_mode));
  j["grid_lambdas"] = c.grid_lambdas;
  j["grid_alphas"] = c.grid_alphas;
  j["grid_epsilon"] = c.grid_epsilon;
  j["seed"] = c.seed;
  j["emit"] = std::vector<std::string>(c.emit.begin(), c.emit.end());
  return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) config_error("config must be a JSON object");
  static const std::set<std::string> known{
      "command", "input",   "treated",  "t0",    "penalty",      "lambda",       "alpha",
      "cv_k",    "cv_mode", "grid_lambdas", "grid_alphas", "grid_epsilon", "dgp", "error",
      "b",       "horizons", "methods", "j",     "sim_t0",       "t1",           "delta",
      "horizon_reading", "seed", "emit"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) config_error("unknown config key '" + key + "'");
  }
  if (!j.contains("command")) config_error("config needs a 'command'");

  RunConfig c;
  c.command = parse_command(get_as<std::string>(j, "command"));
  if (j.contains("input") && !j["input"].is_null()) c.input_path = get_as<std::string>(j, "input");
  if (j.contains("treated")) c.treated_column = get_as<std::string>(j, "treated");
  if (j.contains("t0")) {
    c.t0 = j["t0"].is_number_integer() ? std::to_string(j["t0"].get<long long>())
                                       : get_as<std::string>(j, "t0");
  }
  if (j.contains("penalty")) c.penalty = get_as<std::string>(j, "penalty");
  if (j.contains("lambda") && !j["lambda"].is_null()) c.lambda = get_as<double>(j, "lambda");
  if (j.contains("alpha") && !j["alpha"].is_null()) c.alpha = get_as<double>(j, "alpha");
  if (j.contains("cv_k")) c.cv_k = get_as<int>(j, "cv_k");
  if (j.contains("cv_mode")) c.cv_mode = parse_cv_mode(get_as<std::string>(j, "cv_mode"));
  if (j.contains("grid_lambdas")) c.grid_lambdas = get_as<int>(j, "grid_lambdas");
  if (j.contains("grid_alphas")) c.grid_alphas = get_as<int>(j, "grid_alphas");
  if (j.contains("grid_epsilon")) c.grid_epsilon = get_as<double>(j, "grid_epsilon");
  if (j.contains("dgp")) c.dgp = get_as<int>(j, "dgp");
  if (j.contains("error")) c.error = parse_error_kind(get_as<std::string>(j, "error"));
  if (j.contains("b")) c.b = get_as<int>(j, "b");
  if (j.contains("horizons")) c.horizons = get_as<std::vector<Index>>(j, "horizons");
  if (j.contains("methods")) c.methods = get_as<std::vector<std::string>>(j, "methods");
  if (j.contains("j")) c.sim_j = get_as<Index>(j, "j");
  if (j.contains("sim_t0")) c.sim_t0 = get_as<Index>(j, "sim_t0");
  if (j.contains("t1")) c.sim_t1 = get_as<Index>(j, "t1");
  if (j.contains("delta")) c.delta = get_as<double>(j, "delta");
  if (j.contains("horizon_reading")) c.reading = parse_reading(get_as<std::string>(j, "horizon_reading"));
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("emit")) {
    const auto list = get_as<std::vector<std::string>>(j, "emit");
    c.emit = std::set<std::string>(list.begin(), list.end());
  }
  return c;
}

RunConfig load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open manifest '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json manifest;
  try {
    manifest = json::parse(buffer.str());
  } catch (const json::exception& e) {
    config_error(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("config")) {
    config_error("manifest has no 'config' object");
  }
  return config_from_json(manifest["config"].dump());
}

int run(const RunConfig& config, std::ostream& err) {
  auto report = [&err](std::string_view code, ErrorCategory category, const std::string& message) {
    const char* name = category == ErrorCategory::Config ? "config"
                       : category == ErrorCategory::Data ? "data"
                                                         : "solver";
    err << json{{"error", {{"code", std::string(code)}, {"category", name}, {"message", message}}}}.dump()
        << '\n';
    return static_cast<int>(category);
  };
  try {
    config.validate();
    std::filesystem::create_directories(config.output_dir);
    if (config.command == Command::Simulate) {
      run_simulate(config);
    } else {
      run_data_command(config);
    }
    return 0;
  } catch (const Error& e) {
    return report(to_string(e.code()), e.category(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report("IoError", ErrorCategory::Data, e.what());
  } catch (const std::exception& e) {
    return report("Internal", ErrorCategory::Solver, e.what());
  }
}

}  // namespace linfsc
