#pragma once

// Penalized weight estimation.
//
// Every penalty is fitted on the (centered) pre-period design by minimizing
//   1/2 |y - Y w|^2 + P(w)
// with
//   Lasso        P = lambda |w|_1
//   Ridge        P = lambda |w|_2^2
//   ElasticNet   P = lambda (alpha |w|_1 + (1 - alpha) |w|_2^2)
//   LInf         P = lambda |w|_inf
//   L1PlusLInf   P = lambda (alpha |w|_1 + (1 - alpha) |w|_inf)
// and ConventionalSC restricting w to the unit simplex with no intercept.
// The non-smooth norms are moved into linear constraints on bound variables
// (c >= |w_j| for the max norm, d_j >= |w_j| for the L1 norm) and handed to
// the barrier QP solver.

#include <optional>

#include "linfsc/model.hpp"
#include "linfsc/qp.hpp"

namespace linfsc {

struct VariableLayout {
  std::optional<Index> mu;
  Index omega_begin = 0;
  Index J = 0;
  std::optional<Index> c;
  std::optional<Index> d_begin;

  Index num_vars() const;
};

struct PenalizedProgram {
  QpProblem qp;
  VariableLayout layout;
  PenaltySpec spec;
  /// Strictly feasible point known from the construction (w = 0, c = 1, d = 1).
  Vector start;
};

/// QP reformulation for Lasso, ElasticNet, LInf, L1PlusLInf and
/// ConventionalSC. Throws UnsupportedPenalty for None and Ridge.
PenalizedProgram build_program(const CenteredDesign& design, const PenaltySpec& spec);

/// Same objective on raw pre-period data with an explicit, unpenalized
/// intercept variable at index 0.
PenalizedProgram build_program_with_intercept(const Vector& y, const Matrix& Y,
                                              const PenaltySpec& spec);

/// Fits any penalty. The design must be centered exactly when
/// spec.fit_intercept is set.
WeightFit solve_penalized(const CenteredDesign& design, const PenaltySpec& spec,
                          const SolverSettings& settings = {});

/// Centers the pre-period to match spec.fit_intercept, then fits.
WeightFit fit_weights(const PanelData& panel, const PenaltySpec& spec,
                      const SolverSettings& settings = {});

/// Unpenalized least squares; throws RankDeficient when the design has
/// fewer rows than columns or is numerically rank deficient.
Vector least_squares(const CenteredDesign& design);

/// Euclidean projection onto {v : |v|_1 <= radius}.
Vector project_l1_ball(const Vector& v, double radius);

/// lse - project_l1_ball(lse, lambda): the max-norm penalized solution for
/// an orthonormal design.
Vector prox_decompose_linf(const Vector& lse, double lambda);

/// Max-norm solution for two orthonormal controls, sign-symmetric form.
Eigen::Vector2d closed_form_j2_linf(double lse2, double lse3, double lambda);

/// sign(v) * max(|v| - lambda, 0)
double soft_threshold(double value, double lambda);

/// sum_j max(|w_j| - lambda (1 - alpha), 0) <= lambda alpha
bool omega2_membership(const Vector& omega, double lambda, double alpha);

/// min 1/2 |y - Y w|^2  s.t.  alpha |w|_1 + |w|_inf <= c_bound.
WeightFit constrained_form_solve(const CenteredDesign& design, double c_bound, double alpha,
                                 const SolverSettings& settings = {});

}  // namespace linfsc
