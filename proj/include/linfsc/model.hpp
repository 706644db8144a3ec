#pragma once

// Panel data and the shared fitting types.
//
// Column 0 of the outcome matrix is the treated unit; columns 1..J are the
// donor pool. Rows are time periods; the first t0 rows are pre-treatment.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "linfsc/qp.hpp"

namespace linfsc {

class PanelData {
 public:
  PanelData(Matrix outcomes, Index t0, std::vector<std::string> unit_labels,
            std::vector<std::string> time_labels);

  const Matrix& outcomes() const { return outcomes_; }
  Index t0() const { return t0_; }
  Index t1() const { return T() - t0_; }
  Index T() const { return outcomes_.rows(); }
  Index J() const { return outcomes_.cols() - 1; }
  const std::vector<std::string>& unit_labels() const { return unit_labels_; }
  const std::vector<std::string>& time_labels() const { return time_labels_; }

  auto treated() const { return outcomes_.col(0); }
  auto controls() const { return outcomes_.rightCols(J()); }
  auto treated_pre() const { return outcomes_.col(0).head(t0_); }
  auto controls_pre() const { return outcomes_.rightCols(J()).topRows(t0_); }
  auto treated_post() const { return outcomes_.col(0).tail(t1()); }
  auto controls_post() const { return outcomes_.rightCols(J()).bottomRows(t1()); }

  /// Short pre-period: unpenalized least squares is not identified.
  bool short_pre_period() const { return t0_ <= J(); }

  bool operator==(const PanelData& other) const;

 private:
  Matrix outcomes_;
  Index t0_;
  std::vector<std::string> unit_labels_;
  std::vector<std::string> time_labels_;
};

/// Checks finiteness, the cutover range and J >= 1. Missing labels are
/// generated ("unit0", "t1", ...).
PanelData validate_panel(const Matrix& raw, Index t0, std::vector<std::string> unit_labels = {},
                         std::vector<std::string> time_labels = {});

enum class PenaltyKind { None, Lasso, Ridge, ElasticNet, LInf, L1PlusLInf, ConventionalSC };

std::string_view to_string(PenaltyKind kind);
/// Accepts the names produced by to_string plus the short CLI spellings
/// ("none", "lasso", "ridge", "elasticnet", "linf", "l1linf", "sc").
PenaltyKind parse_penalty_kind(std::string_view name);
/// Kinds whose penalty mixes two norms through alpha.
bool uses_alpha(PenaltyKind kind);
bool uses_lambda(PenaltyKind kind);

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::None;
  double lambda = 0.0;
  double alpha = 1.0;
  bool fit_intercept = true;

  /// Validated construction; ConventionalSC forces fit_intercept = false.
  static PenaltySpec make(PenaltyKind kind, double lambda = 0.0, double alpha = 1.0,
                          bool fit_intercept = true);
  void validate() const;
};

/// Pre-period regression data, centered when an intercept is fitted.
struct CenteredDesign {
  Vector y;
  Matrix Y;
  double y_mean = 0.0;
  Vector col_means;
  bool centered = false;

  Index rows() const { return Y.rows(); }
  Index J() const { return Y.cols(); }
};

CenteredDesign center_design(const PanelData& panel, bool fit_intercept);
/// Same as above for arbitrary rows, e.g. the training part of a CV fold.
CenteredDesign center_design(const Vector& y, const Matrix& Y, bool fit_intercept);

/// mu = y_mean - col_means' * omega.
double recover_intercept(const Vector& omega, const CenteredDesign& design);

struct SolverSummary {
  QpStatus status = QpStatus::Optimal;
  double objective = 0.0;
  double gap_bound = 0.0;
  int outer_iters = 0;
  int newton_iters = 0;
};

struct WeightFit {
  double mu_hat = 0.0;
  Vector omega_hat;
  PenaltySpec penalty;
  double pre_rmse = 0.0;
  std::optional<SolverSummary> solver_report;
  /// Set when the fit was run with t0 <= J.
  bool short_pre_period = false;
};

/// Left-to-right sum and dot product. Unlike Eigen's vectorized reductions
/// the result does not depend on memory alignment, so identical columns
/// always reduce to identical values.
double ordered_sum(const Eigen::Ref<const Vector>& v);
double ordered_dot(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// Root mean squared in-sample residual of (mu, omega) on the design's rows.
double in_sample_rmse(const CenteredDesign& design, double mu, const Vector& omega);

}  // namespace linfsc
