#include "linfsc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linfsc/effects.hpp"
#include "linfsc/error.hpp"
#include "linfsc/parallel.hpp"
#include "linfsc/penalty.hpp"

namespace linfsc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double beta_draw(double a, double b, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a(stream)) + index);
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IID: return "iid";
    case ErrorKind::AR1: return "ar1";
    case ErrorKind::ARMA11: return "arma11";
  }
  return "unknown";
}

ErrorKind parse_error_kind(std::string_view name) {
  for (auto kind : {ErrorKind::IID, ErrorKind::AR1, ErrorKind::ARMA11}) {
    if (name == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::ConfigError, "unknown error regime '" + std::string(name) + "'");
}

Dgp parse_dgp(int number) {
  if (number < 1 || number > 4) {
    throw Error(ErrorCode::ConfigError, "dgp must be 1, 2, 3 or 4");
  }
  return static_cast<Dgp>(number);
}

void ErrorSpec::validate() const {
  if (!(std::abs(rho) < 1.0)) {
    throw Error(ErrorCode::NonStationary, "autoregressive coefficient must satisfy |rho| < 1");
  }
  if (!(u_sd > 0.0) || !(eps_scale > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "error scales must be positive");
  }
  if (burn_in < 0) throw Error(ErrorCode::InvalidArgument, "burn-in must be non-negative");
}

void DgpSpec::validate() const {
  error.validate();
  if (j < 1) throw Error(ErrorCode::TooFewControls, "simulation needs at least one control");
  if (t0 < 1 || t1 < 1) throw Error(ErrorCode::BadCutover, "t0 and t1 must be positive");
  if (dgp == Dgp::DGP4 && j % 2 != 0) {
    throw Error(ErrorCode::OddJ, "DGP 4 needs an even number of controls");
  }
}

Vector gen_weights(Dgp dgp, Index j, std::mt19937_64& rng) {
  if (j < 1) throw Error(ErrorCode::TooFewControls, "gen_weights: j must be positive");
  const double J = static_cast<double>(j);
  Vector w(j);
  switch (dgp) {
    case Dgp::DGP1:
      w.setConstant(1.0 / J);
      break;
    case Dgp::DGP2: {
      std::uniform_real_distribution<double> unif(-3.0 / J, 3.0 / J);
      for (Index i = 0; i < j; ++i) w[i] = unif(rng);
      break;
    }
    case Dgp::DGP3:
      for (Index i = 0; i < j; ++i) w[i] = (beta_draw(0.2, 0.2, rng) - 0.5) * 3.0 / J;
      break;
    case Dgp::DGP4: {
      if (j % 2 != 0) throw Error(ErrorCode::OddJ, "DGP 4 needs an even number of controls");
      w.setZero();
      for (Index i = 0; i < j / 2; ++i) w[i] = (beta_draw(0.2, 0.2, rng) - 0.5) * 3.0 / J;
      std::shuffle(w.data(), w.data() + j, rng);
      break;
    }
  }
  return w;
}

Vector gen_errors(const ErrorSpec& spec, Index length, double scale, std::mt19937_64& rng) {
  spec.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(length);
  if (spec.kind == ErrorKind::IID) {
    for (Index t = 0; t < length; ++t) out[t] = scale * normal(rng);
    return out;
  }
  const double theta = spec.kind == ErrorKind::ARMA11 ? spec.theta : 0.0;
  double x = 0.0;
  double prev_shock = 0.0;
  for (Index t = -static_cast<Index>(spec.burn_in); t < length; ++t) {
    const double shock = normal(rng);
    x = spec.rho * x + theta * prev_shock + shock;
    prev_shock = shock;
    if (t >= 0) out[t] = scale * x;
  }
  return out;
}

SimPanel gen_panel(const DgpSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index J = spec.j;
  const Index T = spec.t0 + spec.t1;

  Vector weights = gen_weights(spec.dgp, J, rng);
  Matrix factors(T, 2);
  for (Index t = 0; t < T; ++t) {
    factors(t, 0) = normal(rng);
    factors(t, 1) = normal(rng);
  }
  Matrix loadings(J, 2);
  for (Index i = 0; i < J; ++i) {
    // unit index j = i + 2 in the 1-based numbering with the treated unit first
    const double l = static_cast<double>(i + 1) / static_cast<double>(J);
    loadings(i, 0) = l;
    loadings(i, 1) = l;
  }
  Matrix eps(T, J);
  for (Index i = 0; i < J; ++i) eps.col(i) = gen_errors(spec.error, T, spec.error.eps_scale, rng);
  Vector u = gen_errors(spec.error, T, spec.error.u_sd, rng);

  Matrix outcomes(T, J + 1);
  for (Index i = 0; i < J; ++i) {
    outcomes.col(i + 1) = (factors.col(0) + loadings(i, 1) * factors.col(1) + eps.col(i)).array() +
                          loadings(i, 0);
  }
  outcomes.col(0) = outcomes.rightCols(J) * weights + u;
  outcomes.col(0).tail(spec.t1).array() += spec.delta;

  std::vector<std::string> units{"treated"};
  for (Index i = 0; i < J; ++i) units.push_back("control" + std::to_string(i + 1));
  PanelData panel = validate_panel(outcomes, spec.t0, std::move(units));
  return SimPanel{std::move(panel), std::move(weights), spec.delta, std::move(factors),
                  std::move(loadings), std::move(eps), std::move(u)};
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Oracle: return "oracle";
    case Method::SC: return "sc";
    case Method::Lasso: return "lasso";
    case Method::Ridge: return "ridge";
    case Method::ElasticNet: return "elasticnet";
    case Method::LInf: return "linf";
    case Method::L1PlusLInf: return "l1linf";
  }
  return "unknown";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::Oracle, Method::SC,   Method::Lasso,
                                           Method::Ridge,  Method::ElasticNet, Method::LInf,
                                           Method::L1PlusLInf};
  return methods;
}

Method parse_method(std::string_view name) {
  for (Method m : all_methods()) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::ConfigError, "unknown method '" + std::string(name) + "'");
}

PenaltyKind penalty_kind(Method method) {
  switch (method) {
    case Method::Oracle: return PenaltyKind::None;
    case Method::SC: return PenaltyKind::ConventionalSC;
    case Method::Lasso: return PenaltyKind::Lasso;
    case Method::Ridge: return PenaltyKind::Ridge;
    case Method::ElasticNet: return PenaltyKind::ElasticNet;
    case Method::LInf: return PenaltyKind::LInf;
    case Method::L1PlusLInf: return PenaltyKind::L1PlusLInf;
  }
  return PenaltyKind::None;
}

double RmseTable::at(Method method, Index horizon) const {
  for (const auto& row : rows) {
    if (row.method == method && row.horizon == horizon) return row.rmse;
  }
  throw Error(ErrorCode::InvalidArgument, "no RMSE entry for the requested method and horizon");
}

WeightFit fit_method(const PanelData& panel, Method method, const Vector& true_weights,
                     const TuningConfig& tuning, std::uint64_t cv_seed,
                     const SolverSettings& settings, const PenaltySpec* fixed, int threads) {
  if (method == Method::Oracle) {
    WeightFit fit;
    fit.omega_hat = true_weights;
    fit.mu_hat = 0.0;
    fit.penalty = PenaltySpec::make(PenaltyKind::None, 0.0, 1.0, false);
    const CenteredDesign design = center_design(panel, false);
    fit.pre_rmse = in_sample_rmse(design, 0.0, true_weights);
    return fit;
  }
  const PenaltyKind kind = penalty_kind(method);
  if (fixed != nullptr) return fit_weights(panel, *fixed, settings);
  if (!uses_lambda(kind)) return fit_weights(panel, PenaltySpec::make(kind), settings);

  const CenteredDesign design = center_design(panel, true);
  const LambdaGrid lambdas = lambda_grid(design, tuning.n_lambda, tuning.epsilon);
  const TuningGrid grid = TuningGrid::make(lambdas.values, alpha_grid(tuning.n_alpha));
  CvOptions options;
  options.k = std::min<int>(tuning.k, static_cast<int>(design.rows()));
  options.mode = tuning.mode;
  options.seed = cv_seed;
  options.settings = settings;
  options.threads = threads;
  const CvResult cv = tuning.mode == CvMode::TimeFolds
                          ? cross_validate(design, kind, grid, options)
                          : cross_validate(panel, kind, grid, options);
  return solve_penalized(design, PenaltySpec::make(kind, cv.best_lambda, cv.best_alpha), settings);
}

RmseTable run_experiment(const ExperimentConfig& config) {
  config.spec.validate();
  if (config.b < 1) throw Error(ErrorCode::InvalidArgument, "experiment needs at least one replicate");
  if (config.methods.empty()) throw Error(ErrorCode::InvalidArgument, "experiment needs a method");
  for (Index h : config.horizons) {
    if (h < 1 || h > config.spec.t1) {
      throw Error(ErrorCode::InvalidArgument, "horizons must lie in [1, t1]");
    }
  }

  const size_t n_methods = config.methods.size();
  const size_t n_h = config.horizons.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  // errors[r][m * n_h + h] = estimate - truth, NaN when the method failed.
  std::vector<std::vector<double>> errors(static_cast<size_t>(config.b),
                                          std::vector<double>(n_methods * n_h, nan));

  parallel_for(static_cast<size_t>(config.b), config.threads, [&](size_t r) {
    DgpSpec rep = config.spec;
    rep.seed = substream_seed(config.spec.seed, "simulate", r);
    const SimPanel sim = gen_panel(rep);
    const std::uint64_t cv_seed = substream_seed(config.spec.seed, "cv", r);
    for (size_t mi = 0; mi < n_methods; ++mi) {
      const Method method = config.methods[mi];
      const auto fixed = config.fixed.find(method);
      try {
        const WeightFit fit =
            fit_method(sim.panel, method, sim.true_weights, config.tuning, cv_seed, config.settings,
                       fixed == config.fixed.end() ? nullptr : &fixed->second, 1);
        const EffectSeries effects = dynamic_effects(sim.panel, fit);
        for (size_t hi = 0; hi < n_h; ++hi) {
          const Index h = config.horizons[hi];
          const double estimate = config.reading == HorizonReading::Cumulative
                                      ? effects.horizon_ates.at(h)
                                      : effects.dynamic_effects[h - 1];
          errors[r][mi * n_h + hi] = estimate - sim.true_effect;
        }
      } catch (const Error&) {
        // left as NaN and counted below
      }
    }
  });

  RmseTable table;
  table.b = config.b;
  table.spec = config.spec;
  for (const auto& rep : errors) {
    bool all_failed = true;
    for (size_t mi = 0; mi < n_methods; ++mi) {
      if (!std::isnan(rep[mi * n_h])) all_failed = false;
    }
    if (all_failed) ++table.skipped_replicates;
  }
  for (size_t mi = 0; mi < n_methods; ++mi) {
    int failed = 0;
    for (const auto& rep : errors) {
      if (std::isnan(rep[mi * n_h])) ++failed;
    }
    table.failures[config.methods[mi]] = failed;
    for (size_t hi = 0; hi < n_h; ++hi) {
      double sum_sq = 0.0;
      int used = 0;
      for (const auto& rep : errors) {
        const double e = rep[mi * n_h + hi];
        if (std::isnan(e)) continue;
        sum_sq += e * e;
        ++used;
      }
      const double rmse = used > 0 ? std::sqrt(sum_sq / used) : nan;
      table.rows.push_back(RmseRow{config.methods[mi], config.horizons[hi], rmse, used});
    }
  }
  return table;
}

}  // namespace linfsc
