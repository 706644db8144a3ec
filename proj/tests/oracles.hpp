#pragma once

// Reference computations used by the tests. Nothing here calls the library's
// solvers, so agreement is a real cross-check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace oracle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
  return m;
}

/// rows x cols matrix with orthonormal columns (thin Q of a Gaussian matrix).
inline Matrix orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(rows, cols, rng));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

/// Projection onto {lo <= x <= hi, sum(x) = total} by bisection on the shift.
inline Vector project_box_sum(const Vector& v, const Vector& lo, const Vector& hi, double total) {
  auto excess = [&](double tau) {
    return (v.array() - tau).max(lo.array()).min(hi.array()).sum() - total;
  };
  const double span = v.cwiseAbs().maxCoeff() + lo.cwiseAbs().maxCoeff() + hi.cwiseAbs().maxCoeff() + 1;
  const double tau = bisect(excess, -span - std::abs(total), span + std::abs(total));
  return (v.array() - tau).max(lo.array()).min(hi.array()).matrix();
}

/// Projected gradient descent with step 1/L for min 1/2 x'Qx + q'x over a box,
/// optionally with sum(x) = total.
inline Vector projected_gradient(const Matrix& Q, const Vector& q, const Vector& lo,
                                 const Vector& hi, const double* total = nullptr,
                                 int max_iters = 1000000) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
  const double step = 1.0 / eig.eigenvalues().maxCoeff();
  auto project = [&](const Vector& v) -> Vector {
    if (total) return project_box_sum(v, lo, hi, *total);
    return v.cwiseMax(lo).cwiseMin(hi);
  };
  Vector x = project(Vector::Zero(q.size()));
  for (int it = 0; it < max_iters; ++it) {
    Vector next = project(x - step * (Q * x + q));
    const double moved = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    if (moved < 1e-14) break;
  }
  return x;
}

/// Projection of v onto {z : sum_j max(|z_j| - a, 0) <= b}. The Lagrangian
/// solution clips every |v_j| above a + tau down by tau (but not below a);
/// tau is found by bisection.
inline Vector project_capped_l1(const Vector& v, double a, double b) {
  auto shrink = [&](double tau) {
    Vector z(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double m = std::abs(v[j]);
      const double r = m <= a ? m : std::max(a, m - tau);
      z[j] = std::copysign(r, v[j]);
    }
    return z;
  };
  auto used = [&](const Vector& z) { return (z.cwiseAbs().array() - a).max(0.0).sum(); };
  if (used(v) <= b) return v;
  const double tau = bisect([&](double t) { return used(shrink(t)) - b; }, 0.0,
                            v.cwiseAbs().maxCoeff() + 1.0);
  return shrink(tau);
}

/// Orthonormal-design experiment: y = Y * lse, so the least-squares fit is lse.
struct Orthonormal {
  Matrix Y;
  Vector y;
  Vector lse;
};

/// Centered orthonormal columns: Q of the centered Gaussian matrix, so the
/// intercept does not interact with the weights.
inline Orthonormal orthonormal_design(Eigen::Index rows, Eigen::Index J, std::mt19937_64& rng,
                                      double lse_scale = 2.0) {
  Matrix g = gaussian(rows, J, rng);
  g.rowwise() -= g.colwise().mean();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix Y = qr.householderQ() * Matrix::Identity(rows, J);
  Y.rowwise() -= Y.colwise().mean();
  std::uniform_real_distribution<double> u(-lse_scale, lse_scale);
  Vector lse(J);
  for (auto& v : lse) v = u(rng);
  return {Y, Y * lse, lse};
}

/// Sample autocorrelation at the given lag.
inline double autocorrelation(const Vector& x, int lag) {
  const double mean = x.mean();
  double num = 0.0, den = 0.0;
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    den += (x[t] - mean) * (x[t] - mean);
    if (t >= lag) num += (x[t] - mean) * (x[t - lag] - mean);
  }
  return num / den;
}

}  // namespace oracle
