#include "linfsc/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "linfsc/error.hpp"

namespace linfsc {

Index VariableLayout::num_vars() const {
  Index n = J + (mu ? 1 : 0) + (c ? 1 : 0);
  if (d_begin) n += J;
  return n;
}

namespace {

// Y'Y and Y'y with fixed-order dot products, so that identical columns give
// bitwise identical rows.
Matrix gram(const Matrix& Y) {
  const Index J = Y.cols();
  Matrix G(J, J);
  for (Index i = 0; i < J; ++i) {
    for (Index j = 0; j <= i; ++j) G(i, j) = G(j, i) = ordered_dot(Y.col(i), Y.col(j));
  }
  return G;
}

Vector cross(const Matrix& Y, const Vector& y) {
  Vector out(Y.cols());
  for (Index j = 0; j < Y.cols(); ++j) out[j] = ordered_dot(Y.col(j), y);
  return out;
}

// Least-squares block plus penalty bookkeeping. `intercept` prepends an
// unpenalized column of ones to the regressors.
PenalizedProgram assemble(const Vector& y, const Matrix& Y, const PenaltySpec& spec,
                          bool intercept) {
  const Index J = Y.cols();
  const double lambda = spec.lambda;
  const double alpha = spec.alpha;

  double c_cost = 0.0;
  double d_cost = 0.0;
  double ridge = 0.0;
  bool simplex = false;
  switch (spec.kind) {
    case PenaltyKind::Lasso:
      d_cost = lambda;
      break;
    case PenaltyKind::ElasticNet:
      d_cost = lambda * alpha;
      ridge = 2.0 * lambda * (1.0 - alpha);
      break;
    case PenaltyKind::LInf:
      c_cost = lambda;
      break;
    case PenaltyKind::L1PlusLInf:
      c_cost = lambda * (1.0 - alpha);
      d_cost = lambda * alpha;
      break;
    case PenaltyKind::ConventionalSC:
      simplex = true;
      break;
    case PenaltyKind::None:
    case PenaltyKind::Ridge:
      throw Error(ErrorCode::UnsupportedPenalty,
                  std::string("build_program: ") + std::string(to_string(spec.kind)) +
                      " has a closed form and no QP reformulation");
  }

  // A bound variable without cost is unbounded above and the barrier has no
  // minimizer, so zero-cost bounds are left out (alpha at 0 or 1 reduces
  // L1PlusLInf to one of its parts).
  VariableLayout layout;
  layout.J = J;
  Index next = 0;
  if (intercept) layout.mu = next++;
  layout.omega_begin = next;
  next += J;
  if (c_cost > 0.0) layout.c = next++;
  if (d_cost > 0.0) {
    layout.d_begin = next;
    next += J;
  }
  const Index n = next;

  Matrix Q = Matrix::Zero(n, n);
  Vector q = Vector::Zero(n);
  Q.block(layout.omega_begin, layout.omega_begin, J, J) = gram(Y);
  q.segment(layout.omega_begin, J) = -cross(Y, y);
  if (ridge > 0.0) Q.block(layout.omega_begin, layout.omega_begin, J, J).diagonal().array() += ridge;
  if (layout.mu) {
    const Index m0 = *layout.mu;
    Q(m0, m0) = static_cast<double>(y.size());
    const Vector colsum = Y.colwise().sum().transpose();
    Q.block(layout.omega_begin, m0, J, 1) = colsum;
    Q.block(m0, layout.omega_begin, 1, J) = colsum.transpose();
    q[m0] = -y.sum();
  }
  if (layout.c) q[*layout.c] = c_cost;
  if (layout.d_begin) q.segment(*layout.d_begin, J).setConstant(d_cost);

  const Index families = (layout.c ? 1 : 0) + (layout.d_begin ? 1 : 0);
  const Index m = simplex ? J : 2 * J * families;
  Matrix G = Matrix::Zero(m, n);
  Vector h = Vector::Zero(m);
  Matrix A;
  Vector b;
  Index row = 0;
  for (Index j = 0; j < J; ++j) {
    const Index w = layout.omega_begin + j;
    if (simplex) {
      G(row++, w) = -1.0;
      continue;
    }
    if (layout.c) {
      G(row, w) = 1.0;
      G(row++, *layout.c) = -1.0;
      G(row, w) = -1.0;
      G(row++, *layout.c) = -1.0;
    }
    if (layout.d_begin) {
      G(row, w) = 1.0;
      G(row++, *layout.d_begin + j) = -1.0;
      G(row, w) = -1.0;
      G(row++, *layout.d_begin + j) = -1.0;
    }
  }
  if (simplex) {
    A = Matrix::Zero(1, n);
    A.block(0, layout.omega_begin, 1, J).setOnes();
    b = Vector::Ones(1);
  }

  Vector start = Vector::Zero(n);
  if (simplex) start.segment(layout.omega_begin, J).setConstant(1.0 / static_cast<double>(J));
  if (layout.c) start[*layout.c] = 1.0;
  if (layout.d_begin) start.segment(*layout.d_begin, J).setOnes();

  return PenalizedProgram{QpProblem(std::move(Q), std::move(q), std::move(G), std::move(h),
                                    std::move(A), std::move(b)),
                          layout, spec, std::move(start)};
}

SolverSummary summarize(const QpSolution& sol) {
  return SolverSummary{sol.status, sol.objective, sol.gap_bound, sol.outer_iters,
                       sol.newton_iters};
}

QpSolution solve_or_throw(const QpProblem& qp, const SolverSettings& settings,
                          const Vector& start) {
  QpSolution sol;
  try {
    sol = solve_qp(qp, settings, start);
  } catch (const Error& e) {
    throw Error(ErrorCode::SolverFailure, std::string("QP solve failed: ") + e.what());
  }
  if (sol.status != QpStatus::Optimal) {
    throw Error(ErrorCode::SolverFailure,
                std::string("QP solve ended with status ") + std::string(to_string(sol.status)));
  }
  return sol;
}

void check_design(const CenteredDesign& design) {
  if (design.J() < 1 || design.rows() < 1 || design.y.size() != design.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "design is empty or inconsistent");
  }
}

}  // namespace

PenalizedProgram build_program(const CenteredDesign& design, const PenaltySpec& spec) {
  spec.validate();
  check_design(design);
  return assemble(design.y, design.Y, spec, /*intercept=*/false);
}

PenalizedProgram build_program_with_intercept(const Vector& y, const Matrix& Y,
                                              const PenaltySpec& spec) {
  spec.validate();
  if (spec.kind == PenaltyKind::ConventionalSC) {
    throw Error(ErrorCode::UnsupportedPenalty, "conventional SC has no intercept");
  }
  return assemble(y, Y, spec, /*intercept=*/true);
}

Vector least_squares(const CenteredDesign& design) {
  check_design(design);
  if (design.rows() <= design.J()) {
    throw Error(ErrorCode::RankDeficient,
                "least squares needs more pre-treatment periods than controls (t0 > J)");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(design.Y);
  if (qr.rank() < design.J()) {
    throw Error(ErrorCode::RankDeficient, "control matrix is rank deficient");
  }
  return qr.solve(design.y);
}

WeightFit solve_penalized(const CenteredDesign& design, const PenaltySpec& spec,
                          const SolverSettings& settings) {
  spec.validate();
  check_design(design);
  if (design.centered != spec.fit_intercept) {
    throw Error(ErrorCode::InvalidArgument,
                "design centering does not match the penalty's intercept setting");
  }

  WeightFit fit;
  fit.penalty = spec;
  fit.short_pre_period = design.rows() <= design.J();

  const bool zero_penalty = uses_lambda(spec.kind) && spec.lambda == 0.0;
  if (spec.kind == PenaltyKind::None || zero_penalty) {
    fit.omega_hat = least_squares(design);
  } else if (spec.kind == PenaltyKind::Ridge ||
             (spec.kind == PenaltyKind::ElasticNet && spec.alpha == 0.0)) {
    Matrix normal = gram(design.Y);
    normal.diagonal().array() += 2.0 * spec.lambda;
    Eigen::LLT<Matrix> llt(normal);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SolverFailure, "ridge normal equations are not positive definite");
    }
    fit.omega_hat = llt.solve(cross(design.Y, design.y));
  } else {
    PenalizedProgram program = build_program(design, spec);
    QpSolution sol = solve_or_throw(program.qp, settings, program.start);
    fit.omega_hat = sol.x.segment(program.layout.omega_begin, program.layout.J);
    fit.solver_report = summarize(sol);
  }
  fit.mu_hat = design.centered ? recover_intercept(fit.omega_hat, design) : 0.0;
  fit.pre_rmse = in_sample_rmse(design, fit.mu_hat, fit.omega_hat);
  return fit;
}

WeightFit fit_weights(const PanelData& panel, const PenaltySpec& spec,
                      const SolverSettings& settings) {
  return solve_penalized(center_design(panel, spec.fit_intercept), spec, settings);
}

Vector project_l1_ball(const Vector& v, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "project_l1_ball: radius must be positive");
  if (v.lpNorm<1>() <= radius) return v;
  std::vector<double> u(v.size());
  for (Index i = 0; i < v.size(); ++i) u[static_cast<size_t>(i)] = std::abs(v[i]);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - radius) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v[i]) - theta, 0.0);
    out[i] = v[i] < 0.0 ? -mag : mag;
  }
  return out;
}

Vector prox_decompose_linf(const Vector& lse, double lambda) {
  return lse - project_l1_ball(lse, lambda);
}

Eigen::Vector2d closed_form_j2_linf(double lse2, double lse3, double lambda) {
  auto component = [lambda](double own, double other) {
    const double a = std::abs(own);
    const double diff = std::clamp(a - std::abs(other), -lambda, lambda);
    const double mag = std::max(a - 0.5 * (diff + lambda), 0.0);
    return own < 0.0 ? -mag : mag;
  };
  return {component(lse2, lse3), component(lse3, lse2)};
}

double soft_threshold(double value, double lambda) {
  const double mag = std::max(std::abs(value) - lambda, 0.0);
  return value < 0.0 ? -mag : mag;
}

bool omega2_membership(const Vector& omega, double lambda, double alpha) {
  double excess = 0.0;
  for (Index j = 0; j < omega.size(); ++j) {
    excess += std::max(std::abs(omega[j]) - lambda * (1.0 - alpha), 0.0);
  }
  return excess <= lambda * alpha;
}

WeightFit constrained_form_solve(const CenteredDesign& design, double c_bound, double alpha,
                                 const SolverSettings& settings) {
  check_design(design);
  if (!(c_bound > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "constrained_form_solve: c_bound must be positive");
  }
  if (!(alpha >= 0.0 && std::isfinite(alpha))) {
    throw Error(ErrorCode::InvalidArgument, "constrained_form_solve: alpha must be finite and >= 0");
  }
  const Index J = design.J();
  const bool with_d = alpha > 0.0;
  const Index c = J;
  const Index d0 = J + 1;
  const Index n = with_d ? 2 * J + 1 : J + 1;
  const Index m = (with_d ? 4 * J : 2 * J) + 1;

  Matrix Q = Matrix::Zero(n, n);
  Q.topLeftCorner(J, J) = gram(design.Y);
  Vector q = Vector::Zero(n);
  q.head(J) = -cross(design.Y, design.y);
  Matrix G = Matrix::Zero(m, n);
  Vector h = Vector::Zero(m);
  Index row = 0;
  for (Index j = 0; j < J; ++j) {
    G(row, j) = 1.0;
    G(row++, c) = -1.0;
    G(row, j) = -1.0;
    G(row++, c) = -1.0;
    if (with_d) {
      G(row, j) = 1.0;
      G(row++, d0 + j) = -1.0;
      G(row, j) = -1.0;
      G(row++, d0 + j) = -1.0;
    }
  }
  // alpha * sum(d) + c <= c_bound
  G(row, c) = 1.0;
  if (with_d) G.block(row, d0, 1, J).setConstant(alpha);
  h[row] = c_bound;

  Vector start = Vector::Zero(n);
  start[c] = c_bound / 3.0;
  if (with_d) start.segment(d0, J).setConstant(c_bound / (3.0 * alpha * static_cast<double>(J)));

  QpProblem qp(std::move(Q), std::move(q), std::move(G), std::move(h));
  QpSolution sol = solve_or_throw(qp, settings, start);

  WeightFit fit;
  fit.penalty = PenaltySpec{PenaltyKind::L1PlusLInf, 0.0, alpha, design.centered};
  fit.short_pre_period = design.rows() <= J;
  fit.omega_hat = sol.x.head(J);
  fit.mu_hat = design.centered ? recover_intercept(fit.omega_hat, design) : 0.0;
  fit.pre_rmse = in_sample_rmse(design, fit.mu_hat, fit.omega_hat);
  fit.solver_report = summarize(sol);
  return fit;
}

}  // namespace linfsc
