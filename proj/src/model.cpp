#include "linfsc/model.hpp"

#include <cmath>
#include <sstream>

#include "linfsc/error.hpp"

namespace linfsc {

PanelData::PanelData(Matrix outcomes, Index t0, std::vector<std::string> unit_labels,
                     std::vector<std::string> time_labels)
    : outcomes_(std::move(outcomes)), t0_(t0), unit_labels_(std::move(unit_labels)),
      time_labels_(std::move(time_labels)) {}

bool PanelData::operator==(const PanelData& other) const {
  return t0_ == other.t0_ && outcomes_.rows() == other.outcomes_.rows() &&
         outcomes_.cols() == other.outcomes_.cols() && outcomes_ == other.outcomes_ &&
         unit_labels_ == other.unit_labels_ && time_labels_ == other.time_labels_;
}

PanelData validate_panel(const Matrix& raw, Index t0, std::vector<std::string> unit_labels,
                         std::vector<std::string> time_labels) {
  const Index T = raw.rows();
  if (T == 0 || raw.cols() == 0) {
    throw Error(ErrorCode::BadCutover, "panel is empty");
  }
  if (raw.cols() < 2) {
    throw Error(ErrorCode::TooFewControls, "panel has no control units (J = 0)");
  }
  for (Index c = 0; c < raw.cols(); ++c) {
    for (Index r = 0; r < T; ++r) {
      if (!std::isfinite(raw(r, c))) {
        std::ostringstream msg;
        msg << "non-finite outcome at row " << r << ", column " << c;
        throw Error(ErrorCode::NonFinite, msg.str());
      }
    }
  }
  if (t0 < 1 || t0 > T - 1) {
    std::ostringstream msg;
    msg << "t0 = " << t0 << " outside [1, " << T - 1 << "]";
    throw Error(ErrorCode::BadCutover, msg.str());
  }
  if (unit_labels.empty()) {
    for (Index c = 0; c < raw.cols(); ++c) unit_labels.push_back("unit" + std::to_string(c));
  }
  if (time_labels.empty()) {
    for (Index r = 0; r < T; ++r) time_labels.push_back("t" + std::to_string(r + 1));
  }
  if (static_cast<Index>(unit_labels.size()) != raw.cols() ||
      static_cast<Index>(time_labels.size()) != T) {
    throw Error(ErrorCode::DimensionMismatch, "label counts do not match the outcome matrix");
  }
  return PanelData(raw, t0, std::move(unit_labels), std::move(time_labels));
}

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::None: return "none";
    case PenaltyKind::Lasso: return "lasso";
    case PenaltyKind::Ridge: return "ridge";
    case PenaltyKind::ElasticNet: return "elasticnet";
    case PenaltyKind::LInf: return "linf";
    case PenaltyKind::L1PlusLInf: return "l1linf";
    case PenaltyKind::ConventionalSC: return "sc";
  }
  return "unknown";
}

PenaltyKind parse_penalty_kind(std::string_view name) {
  for (auto kind : {PenaltyKind::None, PenaltyKind::Lasso, PenaltyKind::Ridge,
                    PenaltyKind::ElasticNet, PenaltyKind::LInf, PenaltyKind::L1PlusLInf,
                    PenaltyKind::ConventionalSC}) {
    if (name == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::ConfigError, "unknown penalty kind '" + std::string(name) + "'");
}

bool uses_alpha(PenaltyKind kind) {
  return kind == PenaltyKind::ElasticNet || kind == PenaltyKind::L1PlusLInf;
}

bool uses_lambda(PenaltyKind kind) {
  return kind != PenaltyKind::None && kind != PenaltyKind::ConventionalSC;
}

PenaltySpec PenaltySpec::make(PenaltyKind kind, double lambda, double alpha, bool fit_intercept) {
  PenaltySpec spec{kind, lambda, alpha, fit_intercept};
  if (kind == PenaltyKind::ConventionalSC) spec.fit_intercept = false;
  spec.validate();
  return spec;
}

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "penalty lambda must be finite and >= 0");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "penalty alpha must lie in [0, 1]");
  }
  if (kind == PenaltyKind::ConventionalSC && fit_intercept) {
    throw Error(ErrorCode::InvalidArgument, "conventional SC has no intercept");
  }
}

CenteredDesign center_design(const Vector& y, const Matrix& Y, bool fit_intercept) {
  if (y.size() != Y.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "center_design: y and Y row counts differ");
  }
  CenteredDesign d;
  d.centered = fit_intercept;
  if (!fit_intercept) {
    d.y = y;
    d.Y = Y;
    d.col_means = Vector::Zero(Y.cols());
    return d;
  }
  const double rows = static_cast<double>(Y.rows());
  d.y_mean = ordered_sum(y) / rows;
  d.col_means.resize(Y.cols());
  for (Index j = 0; j < Y.cols(); ++j) d.col_means[j] = ordered_sum(Y.col(j)) / rows;
  d.y = y.array() - d.y_mean;
  d.Y = Y.rowwise() - d.col_means.transpose();
  return d;
}

CenteredDesign center_design(const PanelData& panel, bool fit_intercept) {
  return center_design(Vector(panel.treated_pre()), Matrix(panel.controls_pre()), fit_intercept);
}

double recover_intercept(const Vector& omega, const CenteredDesign& design) {
  if (omega.size() != design.J()) {
    throw Error(ErrorCode::DimensionMismatch, "recover_intercept: weight length mismatch");
  }
  return design.y_mean - design.col_means.dot(omega);
}

double ordered_sum(const Eigen::Ref<const Vector>& v) {
  double total = 0.0;
  for (Index i = 0; i < v.size(); ++i) total += v[i];
  return total;
}

double ordered_dot(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  double total = 0.0;
  for (Index i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

double in_sample_rmse(const CenteredDesign& design, double mu, const Vector& omega) {
  // Residuals on centered data equal the raw residuals once mu is recovered.
  const double shift = design.centered ? mu - recover_intercept(omega, design) : mu;
  const Vector resid = (design.y - design.Y * omega).array() - shift;
  return std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
}

}  // namespace linfsc
