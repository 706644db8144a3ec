#pragma once

// Dense convex quadratic programming by the log-barrier path-following method.
//
//   minimize   1/2 x'Qx + q'x
//   subject to Gx <= h,  Ax = b
//
// Each outer iteration minimizes  gamma * (1/2 x'Qx + q'x) - sum_i log(h_i - g_i x)
// over {Ax = b} with damped Newton steps, warm-started at the previous
// minimizer, then grows gamma by a constant factor. The final iterate is
// within m / gamma of the constrained optimum.

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace linfsc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

class QpProblem {
 public:
  /// Q is symmetrized on construction; G/h and A/b may have zero rows.
  QpProblem(Matrix Q, Vector q, Matrix G, Vector h, Matrix A = Matrix(),
            Vector b = Vector());

  const Matrix& Q() const { return Q_; }
  const Vector& q() const { return q_; }
  const Matrix& G() const { return G_; }
  const Vector& h() const { return h_; }
  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }

  Index num_vars() const { return q_.size(); }
  Index num_ineq() const { return h_.size(); }
  Index num_eq() const { return b_.size(); }
  bool unconstrained() const { return num_ineq() == 0 && num_eq() == 0; }

  double objective(const Vector& x) const;
  /// h - Gx
  Vector slack(const Vector& x) const;
  /// G * dx using the cached row sparsity.
  Vector apply_G(const Vector& dx) const;

  /// Adds sum_i w_i g_i g_i' to H, visiting only the nonzeros of each row.
  void accumulate_gram(const Vector& w, Matrix& H) const;

 private:
  struct SparseRow {
    std::vector<Index> cols;
    std::vector<double> vals;
  };

  Matrix Q_;
  Vector q_;
  Matrix G_;
  Vector h_;
  Matrix A_;
  Vector b_;
  std::vector<SparseRow> rows_;
};

struct SolverSettings {
  double gamma0 = 1.0;
  double mu = 10.0;
  double tol_gap = 1e-8;
  int max_outer = 50;
  int max_newton = 50;
  double ls_alpha = 0.25;
  double ls_beta = 0.5;
  /// Centering stops once the Newton decrement falls below this.
  double newton_tol = 1e-10;
  /// Added to the Newton-system diagonal.
  double kkt_regularization = 1e-12;

  /// Throws InvalidArgument when any field is out of range.
  void validate() const;
};

enum class QpStatus { Optimal, MaxIterations, Infeasible };

std::string_view to_string(QpStatus status);

struct QpSolution {
  Vector x;
  double objective = 0.0;
  /// m / gamma at exit.
  double gap_bound = 0.0;
  int outer_iters = 0;
  int newton_iters = 0;
  QpStatus status = QpStatus::MaxIterations;
  /// Multipliers from one extra Newton step at the final gamma.
  Vector ineq_duals;
  Vector eq_duals;
  /// True objective after each outer centering.
  std::vector<double> objective_trace;
};

/// Infinity norm of the KKT conditions (stationarity, primal feasibility,
/// dual sign, complementarity) at a solution.
double kkt_residual(const QpProblem& problem, const QpSolution& solution);

/// A strictly feasible point with Ax = b. `hint` is returned unchanged when
/// it is strictly inside; otherwise a phase-I program minimizes the worst
/// violation and returns a point with every slack >= 1e-6 * (1 + |h|_inf).
/// Throws Infeasible.
Vector find_strictly_feasible(const QpProblem& problem,
                              const std::optional<Vector>& hint = std::nullopt);

/// gamma * objective(x) - sum log(h - Gx). Throws DomainViolation when any
/// slack is non-positive.
double barrier_objective(const QpProblem& problem, const Vector& x, double gamma);

struct CenteringResult {
  Vector x;
  int newton_steps = 0;
  bool converged = false;
};

/// Damped Newton minimization of the barrier objective at fixed gamma,
/// restricted to {Ax = b}. x0 must be strictly feasible.
CenteringResult newton_centering(const QpProblem& problem, const Vector& x0,
                                 double gamma, const SolverSettings& settings);

/// Full path-following solve. Throws Infeasible when no strictly feasible
/// point exists; iteration exhaustion is reported through status.
QpSolution solve_qp(const QpProblem& problem, const SolverSettings& settings = {},
                    const std::optional<Vector>& start = std::nullopt);

}  // namespace linfsc
