#include "linfsc/tune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "linfsc/error.hpp"
#include "linfsc/parallel.hpp"
#include "linfsc/penalty.hpp"

namespace linfsc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix take_rows(const Matrix& M, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), M.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = M.row(rows[i]);
  return out;
}

Vector take_rows(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

Matrix take_cols(const Matrix& M, const std::vector<Index>& cols) {
  Matrix out(M.rows(), static_cast<Index>(cols.size()));
  for (size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Index>(i)) = M.col(cols[i]);
  return out;
}

void check_k(int k, Index n, const char* what) {
  if (k < 2 || k > n) {
    throw Error(ErrorCode::BadK, std::string("k must lie in [2, ") + std::to_string(n) + "] for " + what);
  }
}

CvResult finish(CvResult result) {
  for (Index i = 0; i < result.rmse_surface.size(); ++i) {
    if (!std::isfinite(result.rmse_surface.data()[i])) ++result.failed_cells;
  }
  if (result.failed_cells == result.rmse_surface.size()) {
    throw Error(ErrorCode::SolverFailure, "cross-validation: every grid cell failed to fit");
  }
  auto [li, ai] = select_best(result.rmse_surface, result.lambdas, result.alphas);
  result.best_lambda_index = li;
  result.best_alpha_index = ai;
  result.best_lambda = result.lambdas[static_cast<size_t>(li)];
  result.best_alpha = result.alphas[static_cast<size_t>(ai)];
  return result;
}

}  // namespace

LambdaGrid lambda_grid(const CenteredDesign& design, int n_points, double epsilon) {
  if (n_points < 2) throw Error(ErrorCode::InvalidArgument, "lambda grid needs at least two points");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda grid epsilon must lie in (0, 1)");
  }
  const Index rows = design.rows();
  if (rows < 2) throw Error(ErrorCode::DimensionMismatch, "lambda grid needs at least two rows");

  const Vector y = design.y.array() - design.y.mean();
  LambdaGrid grid;
  double lambda_max = 0.0;
  bool any_column = false;
  for (Index j = 0; j < design.J(); ++j) {
    const Vector col = design.Y.col(j).array() - design.Y.col(j).mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(rows - 1));
    if (!(sd > 0.0)) {
      grid.degenerate_columns.push_back(j);
      continue;
    }
    any_column = true;
    lambda_max = std::max(lambda_max, std::abs(col.dot(y)) / sd);
  }
  if (!any_column) {
    throw Error(ErrorCode::DegenerateColumn, "every control column has zero variance");
  }
  lambda_max /= static_cast<double>(rows);
  if (!(lambda_max > 0.0)) {
    throw Error(ErrorCode::LambdaMaxZero,
                "treated series is orthogonal to every control; fit without a penalty");
  }
  grid.values.resize(static_cast<size_t>(n_points));
  const double log_max = std::log(lambda_max);
  const double log_eps = std::log(epsilon);
  for (int i = 0; i < n_points; ++i) {
    grid.values[static_cast<size_t>(i)] =
        std::exp(log_max + log_eps * static_cast<double>(i) / static_cast<double>(n_points - 1));
  }
  grid.values.front() = lambda_max;
  grid.values.back() = lambda_max * epsilon;
  return grid;
}

std::vector<double> alpha_grid(int n_points) {
  if (n_points < 1) throw Error(ErrorCode::InvalidArgument, "alpha grid needs at least one point");
  if (n_points == 1) return {0.5};
  std::vector<double> out(static_cast<size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    out[static_cast<size_t>(i)] = static_cast<double>(i) / static_cast<double>(n_points - 1);
  }
  return out;
}

TuningGrid TuningGrid::make(std::vector<double> lambdas, std::vector<double> alphas) {
  TuningGrid grid{std::move(lambdas), std::move(alphas)};
  grid.validate();
  return grid;
}

void TuningGrid::validate() const {
  if (lambdas.empty() || alphas.empty()) {
    throw Error(ErrorCode::InvalidArgument, "tuning grid must be non-empty");
  }
  for (size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) {
      throw Error(ErrorCode::InvalidArgument, "tuning grid lambdas must be positive");
    }
    if (i > 0 && !(lambdas[i] < lambdas[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "tuning grid lambdas must be strictly decreasing");
    }
  }
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alphas must lie in [0, 1]");
  }
}

std::vector<int> kfold_time_split(Index n, int k, std::uint64_t seed) {
  check_k(k, n, "the fold split");
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> folds(static_cast<size_t>(n));
  for (size_t pos = 0; pos < order.size(); ++pos) {
    folds[static_cast<size_t>(order[pos])] = static_cast<int>(pos % static_cast<size_t>(k));
  }
  return folds;
}

std::string_view to_string(CvMode mode) {
  return mode == CvMode::TimeFolds ? "time" : "unit";
}

CvMode parse_cv_mode(std::string_view name) {
  if (name == "time") return CvMode::TimeFolds;
  if (name == "unit") return CvMode::UnitFolds;
  throw Error(ErrorCode::ConfigError, "unknown cv mode '" + std::string(name) + "'");
}

TuningGrid effective_grid(PenaltyKind kind, const TuningGrid& grid) {
  grid.validate();
  if (!uses_lambda(kind)) return TuningGrid{{grid.lambdas.front()}, {1.0}};
  if (!uses_alpha(kind)) return TuningGrid{grid.lambdas, {1.0}};
  return grid;
}

std::pair<Index, Index> select_best(const Matrix& surface, const std::vector<double>& lambdas,
                                    const std::vector<double>& alphas) {
  double best = kInf;
  for (Index i = 0; i < surface.size(); ++i) best = std::min(best, surface.data()[i]);
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  std::pair<Index, Index> pick{-1, -1};
  for (Index li = 0; li < surface.rows(); ++li) {
    for (Index ai = 0; ai < surface.cols(); ++ai) {
      if (!(surface(li, ai) <= best + tol)) continue;
      if (pick.first < 0) {
        pick = {li, ai};
        continue;
      }
      const double l_new = lambdas[static_cast<size_t>(li)];
      const double l_old = lambdas[static_cast<size_t>(pick.first)];
      const double a_new = alphas[static_cast<size_t>(ai)];
      const double a_old = alphas[static_cast<size_t>(pick.second)];
      if (l_new > l_old || (l_new == l_old && a_new > a_old)) pick = {li, ai};
    }
  }
  return pick;
}

CvResult cross_validate(const CenteredDesign& design, PenaltyKind kind, const TuningGrid& grid,
                        const CvOptions& options) {
  if (options.mode != CvMode::TimeFolds) {
    throw Error(ErrorCode::InvalidArgument, "unit-fold cross-validation needs the full panel");
  }
  const TuningGrid cells = effective_grid(kind, grid);
  const Index rows = design.rows();
  check_k(options.k, rows, "time folds");

  CvResult result;
  result.lambdas = cells.lambdas;
  result.alphas = cells.alphas;
  result.seed = options.seed;
  result.mode = CvMode::TimeFolds;
  result.fold_assignments = kfold_time_split(rows, options.k, options.seed);

  std::vector<std::vector<Index>> train(static_cast<size_t>(options.k));
  std::vector<std::vector<Index>> test(static_cast<size_t>(options.k));
  for (Index t = 0; t < rows; ++t) {
    const auto f = static_cast<size_t>(result.fold_assignments[static_cast<size_t>(t)]);
    for (size_t g = 0; g < train.size(); ++g) (g == f ? test : train)[g].push_back(t);
  }

  const Index nl = static_cast<Index>(cells.lambdas.size());
  const Index na = static_cast<Index>(cells.alphas.size());
  result.rmse_surface = Matrix::Constant(nl, na, kInf);
  parallel_for(static_cast<size_t>(nl * na), options.threads, [&](size_t cell) {
    const Index li = static_cast<Index>(cell) / na;
    const Index ai = static_cast<Index>(cell) % na;
    const PenaltySpec spec = PenaltySpec::make(kind, cells.lambdas[static_cast<size_t>(li)],
                                               cells.alphas[static_cast<size_t>(ai)],
                                               options.fit_intercept);
    double sse = 0.0;
    try {
      for (size_t f = 0; f < train.size(); ++f) {
        const CenteredDesign fold = center_design(take_rows(design.y, train[f]),
                                                  take_rows(design.Y, train[f]), spec.fit_intercept);
        const WeightFit fit = solve_penalized(fold, spec, options.settings);
        for (Index t : test[f]) {
          const double gap = design.y[t] - fit.mu_hat - design.Y.row(t).dot(fit.omega_hat);
          sse += gap * gap;
        }
      }
    } catch (const Error&) {
      return;
    }
    result.rmse_surface(li, ai) = std::sqrt(sse / static_cast<double>(rows));
  });
  return finish(std::move(result));
}

CvResult cross_validate(const PanelData& panel, PenaltyKind kind, const TuningGrid& grid,
                        const CvOptions& options) {
  const bool intercept = kind != PenaltyKind::ConventionalSC && options.fit_intercept;
  if (options.mode == CvMode::TimeFolds) {
    return cross_validate(center_design(panel, intercept), kind, grid, options);
  }

  const TuningGrid cells = effective_grid(kind, grid);
  const Index J = panel.J();
  check_k(options.k, J, "unit folds");

  CvResult result;
  result.lambdas = cells.lambdas;
  result.alphas = cells.alphas;
  result.seed = options.seed;
  result.mode = CvMode::UnitFolds;
  result.fold_assignments = kfold_time_split(J, options.k, options.seed);

  const Matrix controls_pre = panel.controls_pre();
  const Matrix controls_post = panel.controls_post();
  std::vector<std::vector<Index>> members(static_cast<size_t>(options.k));
  std::vector<std::vector<Index>> donors(static_cast<size_t>(options.k));
  for (Index j = 0; j < J; ++j) {
    const auto f = static_cast<size_t>(result.fold_assignments[static_cast<size_t>(j)]);
    for (size_t g = 0; g < members.size(); ++g) (g == f ? members : donors)[g].push_back(j);
  }

  const Index nl = static_cast<Index>(cells.lambdas.size());
  const Index na = static_cast<Index>(cells.alphas.size());
  result.rmse_surface = Matrix::Constant(nl, na, kInf);
  parallel_for(static_cast<size_t>(nl * na), options.threads, [&](size_t cell) {
    const Index li = static_cast<Index>(cell) / na;
    const Index ai = static_cast<Index>(cell) % na;
    const PenaltySpec spec = PenaltySpec::make(kind, cells.lambdas[static_cast<size_t>(li)],
                                               cells.alphas[static_cast<size_t>(ai)], intercept);
    double sum_sq = 0.0;
    try {
      for (size_t f = 0; f < members.size(); ++f) {
        const Matrix donors_pre = take_cols(controls_pre, donors[f]);
        const Matrix donors_post = take_cols(controls_post, donors[f]);
        for (Index j : members[f]) {
          const CenteredDesign d = center_design(Vector(controls_pre.col(j)), donors_pre, intercept);
          const WeightFit fit = solve_penalized(d, spec, options.settings);
          const Vector gap =
              (controls_post.col(j) - donors_post * fit.omega_hat).array() - fit.mu_hat;
          const double effect = gap.mean();
          sum_sq += effect * effect;
        }
      }
    } catch (const Error&) {
      return;
    }
    result.rmse_surface(li, ai) = std::sqrt(sum_sq / static_cast<double>(J));
  });
  return finish(std::move(result));
}

}  // namespace linfsc
