#include "dnainv/profile.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dnainv {

std::vector<std::size_t> Breakpoints::interior() const {
  if (indices.size() <= 2) return {};
  return {indices.begin() + 1, indices.end() - 1};
}

std::vector<double> second_difference(std::span<const double> tau) {
  if (tau.size() < 3) throw std::invalid_argument("second_difference: need n >= 3");
  std::vector<double> out(tau.size() - 2);
  for (std::size_t j = 0; j + 2 < tau.size(); ++j) out[j] = tau[j] - 2.0 * tau[j + 1] + tau[j + 2];
  return out;
}

double default_break_tol(std::span<const double> tau) {
  double m = 0.0;
  for (double v : tau) m = std::max(m, std::abs(v));
  return 1e-9 * (1.0 + m);
}

Breakpoints breakpoints(std::span<const double> tau, double tol) {
  const auto n = tau.size();
  Breakpoints bp;
  bp.indices.push_back(0);
  if (n >= 3) {
    auto l = second_difference(tau);
    for (std::size_t j = 0; j < l.size(); ++j)
      if (std::abs(l[j]) > tol) bp.indices.push_back(j + 1);
  }
  if (n > 1) bp.indices.push_back(n - 1);
  return bp;
}

Membership membership(std::span<const double> tau, std::size_t max_breaks, double tol,
                      std::size_t spacing) {
  Membership m;
  auto bp = breakpoints(tau, tol);
  m.in_pc = bp.count() <= max_breaks;
  if (!m.in_pc) return m;

  bool ok = std::all_of(tau.begin(), tau.end(), [](double v) { return v >= 0.0; });
  for (std::size_t i = 0; ok && i + 1 < tau.size(); ++i)
    if (std::abs(tau[i + 1] - tau[i]) <= tol) ok = false;
  m.in_pc_neq = ok;
  if (!ok) return m;

  for (std::size_t k = 0; k + 1 < bp.indices.size(); ++k)
    if (bp.indices[k + 1] - bp.indices[k] < spacing) return m;
  m.in_pc_geq = true;
  return m;
}

std::vector<double> refit_piecewise_linear(const Breakpoints& bp, std::span<const double> weights,
                                           std::span<const double> targets) {
  const auto n = targets.size();
  if (weights.size() != n) throw std::invalid_argument("refit: weights/targets length mismatch");
  if (n < 2) throw std::invalid_argument("refit: need at least two samples");

  // Knot values are the unknowns; sample i between knots a < b is the linear
  // interpolation of the two knot values (hat basis).
  std::vector<std::size_t> knots{0};
  for (auto k : bp.interior())
    if (k > knots.back() && k < n - 1) knots.push_back(k);
  knots.push_back(n - 1);
  const auto p = knots.size();

  for (std::size_t s = 0; s + 1 < p; ++s) {
    std::size_t support = 0;
    for (std::size_t i = knots[s]; i <= knots[s + 1]; ++i)
      if (weights[i] != 0.0) ++support;
    if (support < 2)
      throw std::invalid_argument("refit: segment [" + std::to_string(knots[s] + 1) + ", " +
                                  std::to_string(knots[s + 1] + 1) +
                                  "] has fewer than 2 weighted samples");
  }

  // Normal equations of the hat basis are tridiagonal.
  const auto pe = static_cast<Eigen::Index>(p);
  std::vector<double> diag(p, 0.0), off(p, 0.0);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(pe);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (seg + 2 < p && i > knots[seg + 1]) ++seg;
    if (weights[i] == 0.0) continue;
    const double w2 = weights[i] * weights[i];
    const double span = static_cast<double>(knots[seg + 1] - knots[seg]);
    const double t = static_cast<double>(i - knots[seg]) / span;
    diag[seg] += w2 * (1.0 - t) * (1.0 - t);
    diag[seg + 1] += w2 * t * t;
    off[seg] += w2 * t * (1.0 - t);
    b(static_cast<Eigen::Index>(seg)) += w2 * (1.0 - t) * targets[i];
    b(static_cast<Eigen::Index>(seg + 1)) += w2 * t * targets[i];
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t k = 0; k < p; ++k) {
    const auto ke = static_cast<Eigen::Index>(k);
    trip.emplace_back(ke, ke, diag[k]);
    if (k + 1 < p && off[k] != 0.0) {
      trip.emplace_back(ke + 1, ke, off[k]);
      trip.emplace_back(ke, ke + 1, off[k]);
    }
  }
  Eigen::SparseMatrix<double> M(pe, pe);
  M.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
  Eigen::VectorXd v = ldlt.solve(b);
  if (ldlt.info() != Eigen::Success || !v.allFinite())
    throw std::invalid_argument("refit: singular knot system");

  std::vector<double> out(n);
  seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (seg + 2 < p && i > knots[seg + 1]) ++seg;
    const double span = static_cast<double>(knots[seg + 1] - knots[seg]);
    const double t = static_cast<double>(i - knots[seg]) / span;
    out[i] = (1.0 - t) * v(static_cast<Eigen::Index>(seg)) + t * v(static_cast<Eigen::Index>(seg + 1));
  }
  return out;
}

}  // namespace dnainv
