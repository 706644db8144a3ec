#pragma once

// Monte-Carlo panels from a two-factor model and the RMSE experiment runner.
//
// Controls:  Y_jt = l_j + F1_t + l_j * F2_t + eps_jt,   l_j = (j - 1) / J, j = 2..J+1
// Treated:   Y_1t = sum_j w_j Y_jt + u_t + delta * 1{t > t0}
//
// Four weight designs (DGP 1-4) and three error regimes (iid, AR(1),
// ARMA(1,1)) are supported.

#include <cstdint>
#include <map>
#include <random>
#include <string_view>
#include <vector>

#include "linfsc/model.hpp"
#include "linfsc/tune.hpp"

namespace linfsc {

/// Deterministic child seed for a named stream and index.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index);

enum class Dgp { DGP1 = 1, DGP2 = 2, DGP3 = 3, DGP4 = 4 };
enum class ErrorKind { IID, AR1, ARMA11 };

std::string_view to_string(ErrorKind kind);
ErrorKind parse_error_kind(std::string_view name);
Dgp parse_dgp(int number);

struct ErrorSpec {
  ErrorKind kind = ErrorKind::IID;
  double rho = 0.1;
  double theta = 0.1;
  double u_sd = 1.0;
  double eps_scale = 2.0;
  int burn_in = 100;

  void validate() const;
};

struct DgpSpec {
  Dgp dgp = Dgp::DGP1;
  Index j = 30;
  Index t0 = 100;
  Index t1 = 10;
  double delta = 3.0;
  ErrorSpec error{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimPanel {
  PanelData panel;
  Vector true_weights;
  double true_effect = 0.0;
  Matrix factors;   // T x 2
  Matrix loadings;  // J x 2
  Matrix control_errors;  // T x J
  Vector treated_errors;  // T
};

Vector gen_weights(Dgp dgp, Index j, std::mt19937_64& rng);

/// Unit-innovation noise series of the requested regime scaled by `scale`.
/// Recursive regimes start at zero and discard `burn_in` leading draws.
Vector gen_errors(const ErrorSpec& spec, Index length, double scale, std::mt19937_64& rng);

SimPanel gen_panel(const DgpSpec& spec);

enum class Method { Oracle, SC, Lasso, Ridge, ElasticNet, LInf, L1PlusLInf };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();
/// Penalty used by a method (Oracle has none).
PenaltyKind penalty_kind(Method method);

enum class HorizonReading {
  /// Mean effect over the first h post periods.
  Cumulative,
  /// Effect at period t0 + h alone.
  SinglePeriod,
};

struct TuningConfig {
  int n_lambda = 20;
  int n_alpha = 5;
  int k = 5;
  double epsilon = 1e-4;
  CvMode mode = CvMode::TimeFolds;

  /// The full grid (100 x 11, K = 10).
  static TuningConfig full() { return TuningConfig{100, 11, 10, 1e-4, CvMode::TimeFolds}; }
};

struct ExperimentConfig {
  DgpSpec spec{};
  std::vector<Method> methods = all_methods();
  int b = 200;
  std::vector<Index> horizons = {1, 4, 7, 10};
  TuningConfig tuning{};
  /// Methods listed here skip tuning and use these hyper-parameters.
  std::map<Method, PenaltySpec> fixed{};
  HorizonReading reading = HorizonReading::Cumulative;
  SolverSettings settings{};
  int threads = 0;
};

struct RmseRow {
  Method method;
  Index horizon;
  double rmse;
  int replicates;
};

struct RmseTable {
  std::vector<RmseRow> rows;
  int b = 0;
  DgpSpec spec;
  std::map<Method, int> failures;
  int skipped_replicates = 0;

  double at(Method method, Index horizon) const;
};

/// Fits `method` on `panel`, tuning by time-fold CV unless `fixed` is given.
WeightFit fit_method(const PanelData& panel, Method method, const Vector& true_weights,
                     const TuningConfig& tuning, std::uint64_t cv_seed,
                     const SolverSettings& settings, const PenaltySpec* fixed = nullptr,
                     int threads = 1);

RmseTable run_experiment(const ExperimentConfig& config);

}  // namespace linfsc
