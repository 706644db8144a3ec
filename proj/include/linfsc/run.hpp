#pragma once

// Command pipeline behind the CLI: configuration, execution and output files.
//
//   fit       weights.json
//   tune      cv_surface.csv (+ cv_best.json)
//   effects   effects.csv, ate.json (+ weights.json)
//   simulate  rmse_table.csv (+ rmse_table.json)
//
// Every command also writes manifest.json holding the full configuration;
// `linfsc run --manifest manifest.json --out DIR` repeats the run and
// reproduces the same bytes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "linfsc/model.hpp"
#include "linfsc/sim.hpp"
#include "linfsc/tune.hpp"

namespace linfsc {

enum class Command { Fit, Tune, Effects, Simulate };

std::string_view to_string(Command command);
Command parse_command(std::string_view name);

struct RunConfig {
  Command command = Command::Fit;

  // data commands
  std::optional<std::string> input_path;
  std::string treated_column;
  std::string t0;
  /// A penalty name ("linf", ...) for fixed hyper-parameters, or
  /// "auto:<name>" to tune them by cross-validation first.
  std::string penalty = "auto:linf";
  std::optional<double> lambda;
  std::optional<double> alpha;

  int cv_k = 10;
  CvMode cv_mode = CvMode::TimeFolds;
  int grid_lambdas = 100;
  int grid_alphas = 11;
  double grid_epsilon = 1e-4;

  // simulate
  int dgp = 1;
  ErrorKind error = ErrorKind::IID;
  int b = 200;
  std::vector<Index> horizons{1, 4, 7, 10};
  std::vector<std::string> methods{"oracle", "sc", "lasso", "ridge", "elasticnet", "linf", "l1linf"};
  Index sim_j = 30;
  Index sim_t0 = 100;
  Index sim_t1 = 10;
  double delta = 3.0;
  HorizonReading reading = HorizonReading::Cumulative;

  std::uint64_t seed = 0;
  int threads = 0;
  std::string output_dir = ".";
  std::set<std::string> emit{"csv", "json"};

  void validate() const;
};

/// Serialized configuration (output_dir and threads are excluded: neither
/// changes any output byte).
std::string config_to_json(const RunConfig& config);
/// Rejects unknown keys and malformed values with ConfigError.
RunConfig config_from_json(const std::string& text);
/// Reads the "config" object of a manifest written by run().
RunConfig load_manifest(const std::string& path);

/// Executes the command, writing artifacts to config.output_dir. Returns 0
/// on success; failures print a JSON error object to `err` and return 1
/// (configuration), 2 (data) or 3 (solver).
int run(const RunConfig& config, std::ostream& err);

}  // namespace linfsc
