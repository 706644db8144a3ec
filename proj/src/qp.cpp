#include "linfsc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "linfsc/error.hpp"

namespace linfsc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, "QpProblem: " + what);
}

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

double strict_margin(const QpProblem& p) { return 1e-6 * (1.0 + inf_norm(p.h())); }

bool satisfies_equalities(const QpProblem& p, const Vector& x) {
  if (p.num_eq() == 0) return true;
  return inf_norm(p.A() * x - p.b()) <= 1e-9 * (1.0 + inf_norm(p.b()));
}

struct NewtonStep {
  Vector dx;
  Vector w;  // equality multiplier of the Newton system
};

// Solves [H A'; A 0] [dx; w] = [-g; r].
NewtonStep solve_kkt(Matrix& H, const Matrix& A, const Vector& g, const Vector& r) {
  NewtonStep step;
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() == Eigen::Success) {
    if (A.rows() == 0) {
      step.dx = llt.solve(-g);
      step.w = Vector();
    } else {
      Matrix HinvAt = llt.solve(A.transpose());
      Vector Hinvg = llt.solve(g);
      Matrix S = A * HinvAt;
      Eigen::LDLT<Matrix> schur(S);
      if (schur.info() != Eigen::Success) {
        throw Error(ErrorCode::LinearSolveFailure, "Newton step: singular Schur complement");
      }
      step.w = schur.solve(-A * Hinvg - r);
      step.dx = -Hinvg - HinvAt * step.w;
    }
  } else {
    // Fall back to a pivoted factorization of the full KKT matrix.
    const Index n = H.rows();
    const Index p = A.rows();
    Matrix K = Matrix::Zero(n + p, n + p);
    K.topLeftCorner(n, n) = H;
    if (p > 0) {
      K.topRightCorner(n, p) = A.transpose();
      K.bottomLeftCorner(p, n) = A;
    }
    Vector rhs(n + p);
    rhs.head(n) = -g;
    if (p > 0) rhs.tail(p) = r;
    Eigen::FullPivLU<Matrix> lu(K);
    if (lu.isInvertible()) {
      Vector sol = lu.solve(rhs);
      step.dx = sol.head(n);
      step.w = sol.tail(p);
    } else {
      // Near a degenerate vertex the barrier Hessian spans many orders of
      // magnitude; shift the diagonal until Cholesky goes through.
      const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1.0);
      for (double shift = 1e-15 * scale; shift <= 1e-6 * scale; shift *= 100.0) {
        Matrix shifted = H;
        shifted.diagonal().array() += shift;
        if (Eigen::LLT<Matrix>(shifted).info() == Eigen::Success) return solve_kkt(shifted, A, g, r);
      }
      throw Error(ErrorCode::LinearSolveFailure, "Newton step: singular KKT system");
    }
  }
  if (!step.dx.allFinite()) {
    throw Error(ErrorCode::LinearSolveFailure, "Newton step: non-finite direction");
  }
  return step;
}

// Outer path-following loop shared by the main solve and phase I. `stop`
// is consulted after every centering and may end the loop early.
struct PathResult {
  Vector x;
  double gamma = 0.0;
  int outer = 0;
  int newton = 0;
  bool reached_gap = false;
  bool last_centering_converged = true;
  std::vector<double> trace;
};

PathResult follow_path(const QpProblem& problem, Vector x, const SolverSettings& settings,
                       const std::function<bool(const Vector&, double)>& stop = {}) {
  PathResult out;
  const double m = static_cast<double>(problem.num_ineq());
  double gamma = settings.gamma0;
  for (;;) {
    CenteringResult c = newton_centering(problem, x, gamma, settings);
    x = std::move(c.x);
    out.newton += c.newton_steps;
    out.last_centering_converged = c.converged;
    ++out.outer;
    out.trace.push_back(problem.objective(x));
    if (m / gamma <= settings.tol_gap) {
      out.reached_gap = true;
      break;
    }
    if (stop && stop(x, gamma)) break;
    if (out.outer >= settings.max_outer) break;
    gamma *= settings.mu;
  }
  out.x = std::move(x);
  out.gamma = gamma;
  return out;
}

Vector least_norm_equality_point(const QpProblem& p) {
  if (p.num_eq() == 0) return Vector::Zero(p.num_vars());
  return p.A().completeOrthogonalDecomposition().solve(p.b());
}

}  // namespace

QpProblem::QpProblem(Matrix Q, Vector q, Matrix G, Vector h, Matrix A, Vector b)
    : Q_(std::move(Q)), q_(std::move(q)), G_(std::move(G)), h_(std::move(h)),
      A_(std::move(A)), b_(std::move(b)) {
  const Index n = q_.size();
  require(Q_.rows() == n && Q_.cols() == n, "Q must be n x n");
  if (G_.size() == 0 && h_.size() == 0) G_.resize(0, n);
  if (A_.size() == 0 && b_.size() == 0) A_.resize(0, n);
  require(G_.cols() == n && G_.rows() == h_.size(), "G must be m x n with h of length m");
  require(A_.cols() == n && A_.rows() == b_.size(), "A must be p x n with b of length p");
  require(Q_.allFinite() && q_.allFinite() && G_.allFinite() && h_.allFinite() &&
              A_.allFinite() && b_.allFinite(),
          "non-finite problem data");
  Q_ = 0.5 * (Q_ + Q_.transpose()).eval();

  rows_.resize(static_cast<size_t>(G_.rows()));
  for (Index i = 0; i < G_.rows(); ++i) {
    auto& row = rows_[static_cast<size_t>(i)];
    for (Index j = 0; j < n; ++j) {
      if (G_(i, j) != 0.0) {
        row.cols.push_back(j);
        row.vals.push_back(G_(i, j));
      }
    }
  }
}

double QpProblem::objective(const Vector& x) const { return 0.5 * x.dot(Q_ * x) + q_.dot(x); }

Vector QpProblem::apply_G(const Vector& dx) const {
  Vector out(num_ineq());
  for (Index i = 0; i < num_ineq(); ++i) {
    const auto& row = rows_[static_cast<size_t>(i)];
    double acc = 0.0;
    for (size_t k = 0; k < row.cols.size(); ++k) acc += row.vals[k] * dx[row.cols[k]];
    out[i] = acc;
  }
  return out;
}

Vector QpProblem::slack(const Vector& x) const { return h_ - apply_G(x); }

void QpProblem::accumulate_gram(const Vector& w, Matrix& H) const {
  for (Index i = 0; i < num_ineq(); ++i) {
    const auto& row = rows_[static_cast<size_t>(i)];
    const double wi = w[i];
    for (size_t a = 0; a < row.cols.size(); ++a) {
      const double va = wi * row.vals[a];
      for (size_t c = 0; c < row.cols.size(); ++c) {
        H(row.cols[a], row.cols[c]) += va * row.vals[c];
      }
    }
  }
}

void SolverSettings::validate() const {
  auto bad = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(gamma0 > 0.0)) bad("SolverSettings: gamma0 must be positive");
  if (!(mu > 1.0)) bad("SolverSettings: mu must exceed 1");
  if (!(tol_gap > 0.0)) bad("SolverSettings: tol_gap must be positive");
  if (max_outer < 1 || max_newton < 1) bad("SolverSettings: iteration caps must be positive");
  if (!(ls_alpha > 0.0 && ls_alpha < 0.5)) bad("SolverSettings: ls_alpha must lie in (0, 0.5)");
  if (!(ls_beta > 0.0 && ls_beta < 1.0)) bad("SolverSettings: ls_beta must lie in (0, 1)");
  if (!(newton_tol > 0.0) || kkt_regularization < 0.0) bad("SolverSettings: bad tolerance");
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::MaxIterations: return "MaxIterations";
    case QpStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

double barrier_objective(const QpProblem& problem, const Vector& x, double gamma) {
  const Vector s = problem.slack(x);
  double logsum = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0)) {
      std::ostringstream msg;
      msg << "barrier_objective: slack of row " << i << " is " << s[i];
      throw Error(ErrorCode::DomainViolation, msg.str());
    }
    logsum += std::log(s[i]);
  }
  return gamma * problem.objective(x) - logsum;
}

CenteringResult newton_centering(const QpProblem& problem, const Vector& x0, double gamma,
                                 const SolverSettings& settings) {
  const Index n = problem.num_vars();
  const Index m = problem.num_ineq();
  const Index p = problem.num_eq();

  CenteringResult out;
  out.x = x0;
  Vector& x = out.x;
  Vector s = problem.slack(x);
  if (m > 0 && !(s.minCoeff() > 0.0)) {
    throw Error(ErrorCode::DomainViolation, "newton_centering: start is not strictly feasible");
  }

  Matrix H(n, n);
  for (int iter = 0; iter < settings.max_newton; ++iter) {
    const Vector inv_s = s.cwiseInverse();
    const Vector Qx = problem.Q() * x;
    const Vector obj_grad = Qx + problem.q();
    Vector grad = gamma * obj_grad;
    grad.noalias() += problem.G().transpose() * inv_s;

    H = gamma * problem.Q();
    problem.accumulate_gram(inv_s.cwiseAbs2(), H);
    H.diagonal().array() += settings.kkt_regularization;

    Vector r = p > 0 ? Vector(problem.b() - problem.A() * x) : Vector();
    NewtonStep step = solve_kkt(H, problem.A(), grad, r);
    const Vector& dx = step.dx;

    const double slope = grad.dot(dx);
    const double decrement2 = -slope;
    // Below `floor` the predicted decrease is lost in the rounding of phi.
    double floor = gamma * std::abs(problem.objective(x));
    for (Index i = 0; i < m; ++i) floor += std::abs(std::log(s[i]));
    floor *= 64.0 * std::numeric_limits<double>::epsilon();
    if (!(decrement2 > 0.0) || std::sqrt(decrement2) <= settings.newton_tol ||
        decrement2 / 2.0 <= floor) {
      out.converged = true;
      break;
    }

    const Vector Gdx = problem.apply_G(dx);
    double t = 1.0;
    for (Index i = 0; i < m; ++i) {
      if (Gdx[i] > 0.0) t = std::min(t, s[i] / Gdx[i]);
    }
    if (t < 1.0) t *= 0.99;
    for (int shrink = 0; shrink < 200; ++shrink) {
      bool inside = true;
      for (Index i = 0; i < m; ++i) {
        if (!(s[i] - t * Gdx[i] > 0.0)) {
          inside = false;
          break;
        }
      }
      if (inside) break;
      t *= settings.ls_beta;
    }

    // Barrier change evaluated as a difference to avoid cancellation when
    // gamma * objective is large.
    const double lin = obj_grad.dot(dx);
    const double quad = dx.dot(problem.Q() * dx);
    auto delta_phi = [&](double step_len) {
      double logs = 0.0;
      for (Index i = 0; i < m; ++i) logs += std::log1p(-step_len * Gdx[i] * inv_s[i]);
      return gamma * (step_len * lin + 0.5 * step_len * step_len * quad) - logs;
    };
    bool accepted = false;
    for (int shrink = 0; shrink < 200; ++shrink) {
      const double d = delta_phi(t);
      if (std::isfinite(d) && d <= settings.ls_alpha * t * slope) {
        accepted = true;
        break;
      }
      t *= settings.ls_beta;
      if (t < 1e-18) break;
    }
    if (!accepted) {
      // No representable decrease left along the Newton direction.
      out.converged = true;
      break;
    }
    x.noalias() += t * dx;
    s.noalias() -= t * Gdx;
    ++out.newton_steps;
  }
  return out;
}

Vector find_strictly_feasible(const QpProblem& problem, const std::optional<Vector>& hint) {
  const Index n = problem.num_vars();
  const Index m = problem.num_ineq();
  const double margin = strict_margin(problem);

  auto qualifies = [&](const Vector& x) {
    if (x.size() != n || !x.allFinite()) return false;
    if (!satisfies_equalities(problem, x)) return false;
    return m == 0 || problem.slack(x).minCoeff() >= margin;
  };

  // A caller-supplied start only has to be strictly inside; the margin is a
  // requirement on points this function constructs.
  if (hint && hint->size() == n && hint->allFinite() && satisfies_equalities(problem, *hint) &&
      (m == 0 || problem.slack(*hint).minCoeff() > 0.0)) {
    return *hint;
  }

  Vector x0 = least_norm_equality_point(problem);
  if (!satisfies_equalities(problem, x0)) {
    throw Error(ErrorCode::Infeasible, "equality constraints are inconsistent");
  }
  if (qualifies(x0)) return x0;

  // Phase I over (x, s): minimize s + eps/2 |x|^2  s.t.  Gx - s <= h,  -s <= S,  Ax = b.
  const double floor_s = 1.0 + inf_norm(problem.h());
  const double eps = 1e-8;
  Matrix Q1 = Matrix::Zero(n + 1, n + 1);
  Q1.topLeftCorner(n, n).diagonal().setConstant(eps);
  Vector q1 = Vector::Zero(n + 1);
  q1[n] = 1.0;
  Matrix G1 = Matrix::Zero(m + 1, n + 1);
  G1.topLeftCorner(m, n) = problem.G();
  G1.block(0, n, m, 1).setConstant(-1.0);
  G1(m, n) = -1.0;
  Vector h1(m + 1);
  h1.head(m) = problem.h();
  h1[m] = floor_s;
  Matrix A1 = Matrix::Zero(problem.num_eq(), n + 1);
  if (problem.num_eq() > 0) A1.leftCols(n) = problem.A();
  QpProblem phase1(Q1, q1, G1, h1, A1, problem.b());

  Vector z(n + 1);
  z.head(n) = x0;
  z[n] = std::max(-problem.slack(x0).minCoeff() + 1.0, -floor_s + 1.0);

  SolverSettings settings;
  settings.max_outer = 60;
  bool certified_empty = false;
  auto stop = [&](const Vector& zk, double gamma) {
    if (qualifies(Vector(zk.head(n)))) return true;
    // Lower bound on the phase-I optimum; positive means no feasible point.
    const double lower = phase1.objective(zk) - static_cast<double>(m + 1) / gamma;
    if (lower > margin) {
      certified_empty = true;
      return true;
    }
    return false;
  };
  PathResult path = follow_path(phase1, z, settings, stop);
  Vector candidate = path.x.head(n);
  if (!certified_empty && qualifies(candidate)) return candidate;
  throw Error(ErrorCode::Infeasible, "no strictly feasible point: phase I optimum leaves slack violation");
}

QpSolution solve_qp(const QpProblem& problem, const SolverSettings& settings,
                    const std::optional<Vector>& start) {
  settings.validate();
  const Index m = problem.num_ineq();
  const Index p = problem.num_eq();

  QpSolution sol;
  if (m == 0) {
    // Equality-constrained (or free) QP: a single KKT solve.
    Matrix H = problem.Q();
    H.diagonal().array() += settings.kkt_regularization;
    Vector r = p > 0 ? Vector(problem.b()) : Vector();
    NewtonStep step = solve_kkt(H, problem.A(), problem.q(), r);
    sol.x = step.dx;
    sol.status = QpStatus::Optimal;
    sol.objective = problem.objective(sol.x);
    sol.gap_bound = 0.0;
    sol.ineq_duals = Vector();
    sol.eq_duals = p > 0 ? Vector(step.w) : Vector();
    sol.objective_trace = {sol.objective};
    if (p > 0 && !satisfies_equalities(problem, sol.x)) {
      throw Error(ErrorCode::Infeasible, "equality constraints are inconsistent");
    }
    return sol;
  }

  Vector x0 = find_strictly_feasible(problem, start);
  PathResult path = follow_path(problem, std::move(x0), settings);

  sol.x = std::move(path.x);
  sol.objective = problem.objective(sol.x);
  sol.gap_bound = static_cast<double>(m) / path.gamma;
  sol.outer_iters = path.outer;
  sol.newton_iters = path.newton;
  sol.objective_trace = std::move(path.trace);
  sol.status = (path.reached_gap && path.last_centering_converged) ? QpStatus::Optimal
                                                                  : QpStatus::MaxIterations;

  // Multipliers from one more Newton step at the final gamma: with dx the
  // step, Q(x + dx) + q + G'lambda + A'nu = 0 holds exactly for
  // lambda = (1/s + Gdx/s^2) / gamma and nu = w / gamma. Plain 1/(gamma s)
  // leaves an O(sqrt(decrement) / s) stationarity error on active rows.
  const Vector s = problem.slack(sol.x);
  const Vector inv_s = s.cwiseInverse();
  Vector grad = path.gamma * (problem.Q() * sol.x + problem.q());
  grad.noalias() += problem.G().transpose() * inv_s;
  Matrix H = path.gamma * problem.Q();
  problem.accumulate_gram(inv_s.cwiseAbs2(), H);
  H.diagonal().array() += settings.kkt_regularization;
  Vector r = p > 0 ? Vector(problem.b() - problem.A() * sol.x) : Vector();
  try {
    NewtonStep step = solve_kkt(H, problem.A(), grad, r);
    const Vector Gdx = problem.apply_G(step.dx);
    sol.ineq_duals = (inv_s + Gdx.cwiseProduct(inv_s.cwiseAbs2())).cwiseMax(0.0) / path.gamma;
    if (p > 0) sol.eq_duals = step.w / path.gamma;
  } catch (const Error&) {
    sol.ineq_duals = inv_s / path.gamma;
    if (p > 0) {
      Vector resid = problem.Q() * sol.x + problem.q() + problem.G().transpose() * sol.ineq_duals;
      sol.eq_duals = problem.A().transpose().completeOrthogonalDecomposition().solve(-resid);
    }
  }
  return sol;
}

double kkt_residual(const QpProblem& problem, const QpSolution& solution) {
  const Vector& x = solution.x;
  Vector stat = problem.Q() * x + problem.q();
  double res = 0.0;
  if (problem.num_ineq() > 0) {
    stat.noalias() += problem.G().transpose() * solution.ineq_duals;
    const Vector s = problem.slack(x);
    res = std::max(res, (-s).cwiseMax(0.0).maxCoeff());
    res = std::max(res, (-solution.ineq_duals).cwiseMax(0.0).maxCoeff());
    res = std::max(res, solution.ineq_duals.cwiseProduct(s).cwiseAbs().maxCoeff());
  }
  if (problem.num_eq() > 0) {
    stat.noalias() += problem.A().transpose() * solution.eq_duals;
    res = std::max(res, inf_norm(problem.A() * x - problem.b()));
  }
  return std::max(res, inf_norm(stat));
}

}  // namespace linfsc
