#pragma once

// Hyper-parameter grids and K-fold cross-validation.

#include <cstdint>
#include <vector>

#include "linfsc/model.hpp"

namespace linfsc {

struct LambdaGrid {
  /// Strictly decreasing, from lambda_max down to lambda_max * epsilon.
  std::vector<double> values;
  /// Zero-variance control columns skipped when computing lambda_max.
  std::vector<Index> degenerate_columns;
};

/// lambda_max = max_j |<standardized Y_j, centered y>| / rows, with columns
/// standardized by their sample standard deviation.
LambdaGrid lambda_grid(const CenteredDesign& design, int n_points, double epsilon = 1e-4);

/// n equally spaced values on [0, 1]; a single point is placed at 0.5.
std::vector<double> alpha_grid(int n_points = 11);

struct TuningGrid {
  std::vector<double> lambdas;
  std::vector<double> alphas;

  static TuningGrid make(std::vector<double> lambdas, std::vector<double> alphas);
  void validate() const;
};

/// Seeded random partition of [0, n) into k folds whose sizes differ by at
/// most one. Entry i is the fold id of item i.
std::vector<int> kfold_time_split(Index n, int k, std::uint64_t seed);

enum class CvMode { TimeFolds, UnitFolds };

std::string_view to_string(CvMode mode);
CvMode parse_cv_mode(std::string_view name);

struct CvOptions {
  int k = 10;
  CvMode mode = CvMode::TimeFolds;
  std::uint64_t seed = 0;
  bool fit_intercept = true;
  SolverSettings settings{};
  /// 0 = hardware concurrency.
  int threads = 0;
};

struct CvResult {
  std::vector<double> lambdas;
  std::vector<double> alphas;
  /// rows index lambdas, columns index alphas; failed cells are +inf.
  Matrix rmse_surface;
  Index best_lambda_index = 0;
  Index best_alpha_index = 0;
  double best_lambda = 0.0;
  double best_alpha = 0.0;
  /// Time-fold mode: one id per pre-period row. Unit-fold mode: one per control.
  std::vector<int> fold_assignments;
  std::uint64_t seed = 0;
  CvMode mode = CvMode::TimeFolds;
  int failed_cells = 0;
};

/// Grid actually searched for `kind`: pure-lambda kinds use alpha = 1,
/// kinds without a lambda use a single cell.
TuningGrid effective_grid(PenaltyKind kind, const TuningGrid& grid);

/// Time-fold cross-validation on a pre-period design. Columns are
/// re-centered on each fold's training rows when options.fit_intercept.
CvResult cross_validate(const CenteredDesign& design, PenaltyKind kind, const TuningGrid& grid,
                        const CvOptions& options);

/// Either mode. Unit folds treat each control in turn as a pseudo-treated
/// unit, fit it from the controls outside its fold over the pre-period and
/// score the post-period mean gap.
CvResult cross_validate(const PanelData& panel, PenaltyKind kind, const TuningGrid& grid,
                        const CvOptions& options);

/// Index of the best cell: minimal RMSE, ties within 1e-12 broken toward
/// larger lambda, then larger alpha.
std::pair<Index, Index> select_best(const Matrix& surface, const std::vector<double>& lambdas,
                                    const std::vector<double>& alphas);

}  // namespace linfsc
