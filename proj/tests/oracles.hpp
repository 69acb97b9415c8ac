#pragma once

// Independent reference solvers used only by the test suites.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd second_difference_matrix(int n) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n - 2, n);
  for (int j = 0; j < n - 2; ++j) {
    L(j, j) = 1.0;
    L(j, j + 1) = -2.0;
    L(j, j + 2) = 1.0;
  }
  return L;
}

struct PrimalResult {
  std::vector<double> tau;
  double objective = 0.0;
  bool polished = false;
};

inline double primal_objective(const std::vector<double>& z, const std::vector<double>& w, double lambda,
                               const Eigen::VectorXd& tau) {
  const int n = static_cast<int>(z.size());
  double f = 0.0;
  for (int i = 0; i < n; ++i)
    if (w[i] != 0.0) f += 0.5 * w[i] * w[i] * (tau(i) - z[i]) * (tau(i) - z[i]);
  for (int j = 0; j + 2 < n; ++j) f += lambda * std::abs(tau(j) - 2 * tau(j + 1) + tau(j + 2));
  return f;
}

/// Primal ADMM on s = L tau, then an exact solve on the detected sign pattern
/// of L tau (equality-constrained least squares via the KKT system). The
/// polished point is kept only if it does not raise the objective.
inline PrimalResult primal_genlasso(const std::vector<double>& z, const std::vector<double>& w, double lambda,
                                    int iterations = 20000) {
  const int n = static_cast<int>(z.size());
  const Eigen::MatrixXd L = second_difference_matrix(n);
  Eigen::VectorXd w2(n), zv(n);
  double wmean = 0.0;
  int npos = 0;
  for (int i = 0; i < n; ++i) {
    w2(i) = w[i] * w[i];
    zv(i) = w[i] != 0.0 ? z[i] : 0.0;
    if (w[i] != 0.0) {
      wmean += w2(i);
      ++npos;
    }
  }
  const double rho = wmean / std::max(npos, 1);
  Eigen::MatrixXd A = rho * L.transpose() * L;
  A.diagonal() += w2;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n - 2), y = s, tau = zv;
  const Eigen::VectorXd wz = w2.cwiseProduct(zv);
  const double thr = lambda / rho;
  for (int it = 0; it < iterations; ++it) {
    tau = llt.solve(wz + rho * L.transpose() * (s - y));
    Eigen::VectorXd v = L * tau + y;
    for (int j = 0; j < n - 2; ++j) s(j) = std::copysign(std::max(std::abs(v(j)) - thr, 0.0), v(j));
    y += L * tau - s;
  }

  PrimalResult out;
  out.tau.assign(tau.data(), tau.data() + n);
  out.objective = primal_objective(z, w, lambda, tau);

  // Sign pattern from the ADMM split variable (exact zeros from the shrinkage).
  std::vector<int> sign(n - 2);
  std::vector<int> zero_rows;
  for (int j = 0; j < n - 2; ++j) {
    sign[j] = s(j) > 0 ? 1 : (s(j) < 0 ? -1 : 0);
    if (sign[j] == 0) zero_rows.push_back(j);
  }
  const int k = static_cast<int>(zero_rows.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
  K.topLeftCorner(n, n) = w2.asDiagonal();
  Eigen::VectorXd g = wz;
  for (int j = 0; j < n - 2; ++j) g -= lambda * sign[j] * L.row(j).transpose();
  rhs.head(n) = g;
  for (int r = 0; r < k; ++r) {
    K.block(n + r, 0, 1, n) = L.row(zero_rows[r]);
    K.block(0, n + r, n, 1) = L.row(zero_rows[r]).transpose();
  }
  Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
  if (sol.allFinite()) {
    Eigen::VectorXd cand = sol.head(n);
    const double f = primal_objective(z, w, lambda, cand);
    if (f <= out.objective) {
      out.tau.assign(cand.data(), cand.data() + n);
      out.objective = f;
      out.polished = true;
    }
  }
  return out;
}

/// Bisection for a root of f on [lo, hi] with f(lo), f(hi) of opposite sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
