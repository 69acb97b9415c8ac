#include "dnainv/genlasso.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dnainv {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct Term {
  Eigen::Index param;
  double coef;
};

// u = N v: each dual entry is a combination of at most two free parameters.
struct Reduction {
  std::size_t m = 0;
  std::vector<std::vector<Term>> rows;  // per u entry
  std::vector<std::size_t> param_index; // u index of each parameter
};

Reduction reduce(const std::vector<bool>& positive, std::size_t n) {
  Reduction r;
  r.m = n - 2;
  const auto m = static_cast<long>(r.m);
  std::vector<bool> zero_forced(r.m, false), interior(r.m, false);
  struct Block {
    long lo, hi;
  };
  std::vector<Block> blocks;

  for (std::size_t i = 0; i < n;) {
    if (positive[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && !positive[j + 1]) ++j;
    const long lo = static_cast<long>(i) - 2, hi = static_cast<long>(j);
    const long virt = std::max(0L, -lo) + std::max(0L, hi - (m - 1));
    const long a = std::max(lo, 0L), b = std::min(hi, m - 1);
    if (virt >= 2) {
      for (long k = a; k <= b; ++k) zero_forced[static_cast<std::size_t>(k)] = true;
    } else {
      for (long k = lo + 1; k < hi; ++k)
        if (k >= 0 && k < m) interior[static_cast<std::size_t>(k)] = true;
      blocks.push_back({lo, hi});
    }
    i = j + 1;
  }

  std::vector<Eigen::Index> param_of(r.m, -1);
  for (std::size_t k = 0; k < r.m; ++k) {
    if (zero_forced[k] || interior[k]) continue;
    param_of[k] = static_cast<Eigen::Index>(r.param_index.size());
    r.param_index.push_back(k);
  }
  r.rows.resize(r.m);
  for (std::size_t k = 0; k < r.m; ++k)
    if (param_of[k] >= 0) r.rows[k].push_back({param_of[k], 1.0});
  auto endpoint = [&](long k) -> Eigen::Index {
    if (k < 0 || k >= m) return -1;
    return param_of[static_cast<std::size_t>(k)];
  };
  for (const auto& blk : blocks) {
    const double span = static_cast<double>(blk.hi - blk.lo);
    const auto pl = endpoint(blk.lo), ph = endpoint(blk.hi);
    for (long k = std::max(blk.lo + 1, 0L); k < blk.hi && k < m; ++k) {
      const double t = static_cast<double>(k - blk.lo) / span;
      auto& row = r.rows[static_cast<std::size_t>(k)];
      if (pl >= 0) row.push_back({pl, 1.0 - t});
      if (ph >= 0) row.push_back({ph, t});
    }
  }
  return r;
}

struct Qp {
  SpMat Q;
  Vec c;
  double lambda;

  double value(const Vec& v) const { return 0.5 * v.dot(Q * v) - c.dot(v); }
  Vec project(Vec v) const { return v.cwiseMax(-lambda).cwiseMin(lambda); }
};

SpMat principal_submatrix(const SpMat& Q, const std::vector<Eigen::Index>& map, Eigen::Index size) {
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index col = 0; col < Q.outerSize(); ++col) {
    if (map[static_cast<std::size_t>(col)] < 0) continue;
    for (SpMat::InnerIterator it(Q, col); it; ++it) {
      const auto r = map[static_cast<std::size_t>(it.row())];
      if (r >= 0) trip.emplace_back(r, map[static_cast<std::size_t>(col)], it.value());
    }
  }
  SpMat S(size, size);
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

struct BoxResult {
  Vec v;
  std::size_t iterations;
  bool converged;
};

double projected_residual(const Qp& qp, const Vec& v, const Vec& g) {
  return (v - qp.project(v - g)).lpNorm<Eigen::Infinity>();
}

// Solves Q_II x_I = c_I - Q_IA v_A for the free block. Returns false when the
// factorization fails.
bool solve_free_block(const Qp& qp, const std::vector<Eigen::Index>& map, Eigen::Index nfree, const Vec& rhs_full,
                      Vec& out) {
  if (nfree == 0) return true;
  SpMat Qf = principal_submatrix(qp.Q, map, nfree);
  Eigen::SimplicialLDLT<SpMat> ldlt(Qf);
  if (ldlt.info() != Eigen::Success) return false;
  Vec b(nfree);
  for (std::size_t j = 0; j < map.size(); ++j)
    if (map[j] >= 0) b(map[j]) = rhs_full(static_cast<Eigen::Index>(j));
  Vec x = ldlt.solve(b);
  x += ldlt.solve(Vec(b - Qf * x));  // one refinement pass
  if (!x.allFinite()) return false;
  for (std::size_t j = 0; j < map.size(); ++j)
    if (map[j] >= 0) out(static_cast<Eigen::Index>(j)) = x(map[j]);
  return true;
}

// Active-set rounds from an initial face guess (-1 lower, 0 free, +1 upper):
// free entries leaving the box are clamped, bounds whose gradient points
// inward are released. Keeps the face solution when it passes the optimality
// test.
bool active_set_rounds(const Qp& qp, std::vector<int> state, Vec& v, double tol, int rounds) {
  const auto p = qp.Q.rows();
  const double lam = qp.lambda;
  for (int round = 0; round < rounds; ++round) {
    Vec x = Vec::Zero(p);
    std::vector<Eigen::Index> map(static_cast<std::size_t>(p), -1);
    Eigen::Index nfree = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const int st = state[static_cast<std::size_t>(j)];
      if (st != 0)
        x(j) = st * lam;
      else
        map[static_cast<std::size_t>(j)] = nfree++;
    }
    if (!solve_free_block(qp, map, nfree, Vec(qp.c - qp.Q * x), x)) return false;
    const Vec g = qp.Q * x - qp.c;
    bool changed = false;
    for (Eigen::Index j = 0; j < p; ++j) {
      int& st = state[static_cast<std::size_t>(j)];
      if (st == 0 && x(j) > lam + tol) {
        st = 1;
        changed = true;
      } else if (st == 0 && x(j) < -lam - tol) {
        st = -1;
        changed = true;
      } else if ((st == 1 && g(j) > tol) || (st == -1 && g(j) < -tol)) {
        st = 0;
        changed = true;
      }
    }
    if (changed) continue;
    x = qp.project(x);
    if (projected_residual(qp, x, Vec(qp.Q * x - qp.c)) > tol) return false;
    v = x;
    return true;
  }
  return false;
}

// Face guess from an interior iterate: a bound is active when its multiplier
// dominates its slack.
bool crossover(const Qp& qp, Vec& v, const Vec& mu1, const Vec& mu2, double tol) {
  const double lam = qp.lambda;
  std::vector<int> state(static_cast<std::size_t>(qp.Q.rows()), 0);
  for (Eigen::Index j = 0; j < qp.Q.rows(); ++j) {
    if (mu1(j) > lam - v(j))
      state[static_cast<std::size_t>(j)] = 1;
    else if (mu2(j) > lam + v(j))
      state[static_cast<std::size_t>(j)] = -1;
  }
  return active_set_rounds(qp, std::move(state), v, tol, 8);
}

// Primal-dual interior-point path following on -lambda <= v <= lambda with
// multipliers mu1 (upper) and mu2 (lower). Each step solves
// (Q + diag(mu1/(lambda-v) + mu2/(lambda+v))) dv = rhs; the sparsity pattern
// is analyzed once.
std::size_t interior_point_phase(const Qp& qp, Vec& v, double tol, std::size_t max_iter) {
  const auto p = qp.Q.rows();
  const double lam = qp.lambda;
  v = v.cwiseMax(-0.99 * lam).cwiseMin(0.99 * lam);
  Vec mu1 = Vec::Constant(p, 1.0), mu2 = Vec::Constant(p, 1.0);
  SpMat K = qp.Q;
  for (Eigen::Index j = 0; j < p; ++j) K.coeffRef(j, j) += 0.0;  // ensure diagonal entries exist
  K.makeCompressed();
  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.analyzePattern(K);

  auto residual = [&](const Vec& x, const Vec& m1, const Vec& m2, double t, Vec& rd, Vec& r1, Vec& r2) {
    rd = qp.Q * x - qp.c + m1 - m2;
    const Vec f1 = x.array() - lam, f2 = -x.array() - lam;
    r1 = -(m1.array() * f1.array()) - 1.0 / t;
    r2 = -(m2.array() * f2.array()) - 1.0 / t;
    return std::sqrt(rd.squaredNorm() + r1.squaredNorm() + r2.squaredNorm());
  };

  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    const Vec f1 = v.array() - lam, f2 = -v.array() - lam;
    const double gap = -(f1.dot(mu1) + f2.dot(mu2));
    const Vec g = qp.Q * v - qp.c;
    if (projected_residual(qp, v, g) <= tol) break;
    if (crossover(qp, v, mu1, mu2, tol)) break;
    const double t = 10.0 * 2.0 * static_cast<double>(p) / std::max(gap, 1e-300);

    Vec rd, r1, r2;
    const double rnorm = residual(v, mu1, mu2, t, rd, r1, r2);
    SpMat M = K;
    const Vec dcoef = -(mu1.array() / f1.array()) - (mu2.array() / f2.array());
    for (Eigen::Index j = 0; j < p; ++j) M.coeffRef(j, j) = qp.Q.coeff(j, j) + dcoef(j);
    ldlt.factorize(M);
    if (ldlt.info() != Eigen::Success) break;
    const Vec rhs = -rd.array() - r1.array() / f1.array() + r2.array() / f2.array();
    Vec dv = ldlt.solve(rhs);
    if (!dv.allFinite()) break;
    const Vec dmu1 = (r1.array() - mu1.array() * dv.array()) / f1.array();
    const Vec dmu2 = (r2.array() + mu2.array() * dv.array()) / f2.array();

    double step = 1.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (dmu1(j) < 0) step = std::min(step, -mu1(j) / dmu1(j));
      if (dmu2(j) < 0) step = std::min(step, -mu2(j) / dmu2(j));
      if (dv(j) > 0) step = std::min(step, (lam - v(j)) / dv(j));
      if (dv(j) < 0) step = std::min(step, (-lam - v(j)) / dv(j));
    }
    step *= 0.99;
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls, step *= 0.5) {
      const Vec nv = v + step * dv, n1 = mu1 + step * dmu1, n2 = mu2 + step * dmu2;
      Vec a, b, c;
      if (residual(nv, n1, n2, t, a, b, c) <= (1.0 - 0.01 * step) * rnorm) {
        v = nv;
        mu1 = n1;
        mu2 = n2;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return it;
}

// Projected Newton (Bertsekas) on the box, used to finish from a feasible
// point: Newton on the free face, diagonal scaling on the epsilon-active set,
// Armijo search along the projection arc; a projected gradient step with a
// Gershgorin bound when the search fails.
BoxResult projected_newton_phase(const Qp& qp, Vec v, double tol, std::size_t max_iter) {
  const auto p = qp.Q.rows();
  double gersh = 0.0;
  for (Eigen::Index col = 0; col < qp.Q.outerSize(); ++col) {
    double s = 0.0;
    for (SpMat::InnerIterator it(qp.Q, col); it; ++it) s += std::abs(it.value());
    gersh = std::max(gersh, s);
  }
  const Vec diag = qp.Q.diagonal();
  const double lam = qp.lambda;
  double f = qp.value(v);

  for (std::size_t it = 0; it < max_iter; ++it) {
    const Vec g = qp.Q * v - qp.c;
    const double res = projected_residual(qp, v, g);
    if (res <= tol) return {v, it, true};

    const double eps = std::min(1e-3 * lam, res);
    std::vector<Eigen::Index> map(static_cast<std::size_t>(p), -1);
    Eigen::Index nfree = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const bool lower = v(j) <= -lam + eps && g(j) > 0.0;
      const bool upper = v(j) >= lam - eps && g(j) < 0.0;
      if (!lower && !upper) map[static_cast<std::size_t>(j)] = nfree++;
    }

    Vec dir(p);
    for (Eigen::Index j = 0; j < p; ++j) dir(j) = -g(j) / std::max(diag(j), 1e-300);
    Vec newton = Vec::Zero(p);
    const bool have_dir = solve_free_block(qp, map, nfree, Vec(-g), newton);
    if (have_dir)
      for (std::size_t j = 0; j < map.size(); ++j)
        if (map[j] >= 0) dir(static_cast<Eigen::Index>(j)) = newton(static_cast<Eigen::Index>(j));

    bool accepted = false;
    if (have_dir) {
      double alpha = 1.0;
      for (int ls = 0; ls < 40 && !accepted; ++ls, alpha *= 0.5) {
        const Vec trial = qp.project(v + alpha * dir);
        double predicted = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
          if (map[static_cast<std::size_t>(j)] >= 0)
            predicted += -alpha * g(j) * dir(j);
          else
            predicted += g(j) * (v(j) - trial(j));
        }
        const double ft = qp.value(trial);
        if (f - ft >= 1e-4 * predicted && ft <= f) {
          v = trial;
          f = ft;
          accepted = true;
        }
      }
    }
    if (!accepted) {
      const Vec trial = qp.project(v - g / gersh);
      const double ft = qp.value(trial);
      if (!(ft < f) && (trial - v).lpNorm<Eigen::Infinity>() == 0.0) return {v, it + 1, false};
      v = trial;
      f = ft;
    }
  }
  const Vec g = qp.Q * v - qp.c;
  return {v, max_iter, projected_residual(qp, v, g) <= tol};
}

BoxResult solve_box_qp(const Qp& qp, Vec v, double tol, std::size_t max_iter, bool warm) {
  if (warm) {
    std::vector<int> state(static_cast<std::size_t>(v.size()), 0);
    for (Eigen::Index j = 0; j < v.size(); ++j)
      state[static_cast<std::size_t>(j)] = v(j) >= qp.lambda ? 1 : (v(j) <= -qp.lambda ? -1 : 0);
    if (active_set_rounds(qp, std::move(state), v, tol, 4)) return {v, 1, true};
  }
  const std::size_t first = interior_point_phase(qp, v, tol, std::min<std::size_t>(max_iter, 200));
  v = qp.project(v);
  auto res = projected_newton_phase(qp, v, tol, max_iter > first ? max_iter - first : 1);
  res.iterations += first;
  return res;
}

// Fill zero-weight coordinates: linear interpolation between anchors,
// linear extension from the two nearest filled points at the borders.
void fill_gaps(std::vector<double>& tau, const std::vector<bool>& positive) {
  const std::size_t n = tau.size();
  std::size_t first = n, last = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (positive[i]) {
      first = std::min(first, i);
      last = i;
    }
  std::size_t prev = first;
  for (std::size_t i = first + 1; i <= last; ++i) {
    if (!positive[i]) continue;
    for (std::size_t k = prev + 1; k < i; ++k) {
      const double t = static_cast<double>(k - prev) / static_cast<double>(i - prev);
      tau[k] = (1.0 - t) * tau[prev] + t * tau[i];
    }
    prev = i;
  }
  if (first > 0) {
    const double slope = tau[first + 1] - tau[first];
    for (std::size_t k = 0; k < first; ++k) tau[k] = tau[first] - slope * static_cast<double>(first - k);
  }
  if (last + 1 < n) {
    const double slope = tau[last] - tau[last - 1];
    for (std::size_t k = last + 1; k < n; ++k) tau[k] = tau[last] + slope * static_cast<double>(k - last);
  }
}

}  // namespace

std::vector<double> second_difference_adjoint(std::span<const double> u) {
  const std::size_t n = u.size() + 2;
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < u.size(); ++j) {
    out[j] += u[j];
    out[j + 1] -= 2.0 * u[j];
    out[j + 2] += u[j];
  }
  return out;
}

GenLassoSolution solve_dual(const GenLassoProblem& p, const GenLassoOptions& opt) {
  const std::size_t n = p.target.size();
  if (p.weights.size() != n) throw GenLassoError(GenLassoError::Kind::InvalidInput, "genlasso: size mismatch");
  if (n < 3) throw GenLassoError(GenLassoError::Kind::InvalidInput, "genlasso: need n >= 3");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda))
    throw GenLassoError(GenLassoError::Kind::InvalidInput, "genlasso: lambda must be finite and >= 0");

  std::vector<bool> positive(n);
  std::vector<double> w2(n, 0.0), z(n, 0.0);
  std::size_t npos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    positive[i] = p.weights[i] != 0.0 && std::isfinite(p.weights[i]);
    if (!positive[i]) continue;
    if (!std::isfinite(p.target[i]))
      throw GenLassoError(GenLassoError::Kind::InvalidInput, "genlasso: non-finite target on a weighted coordinate");
    w2[i] = p.weights[i] * p.weights[i];
    z[i] = p.target[i];
    ++npos;
  }
  if (npos < 2)
    throw GenLassoError(GenLassoError::Kind::RankDeficient, "genlasso: fewer than two weighted coordinates");

  const auto red = reduce(positive, n);
  const auto np = static_cast<Eigen::Index>(red.param_index.size());

  // B = (L^T N) restricted to weighted rows.
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<std::size_t> pos_rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (!positive[i]) continue;
    const auto row = static_cast<Eigen::Index>(pos_rows.size());
    pos_rows.push_back(i);
    const long li = static_cast<long>(i);
    const std::pair<long, double> taps[3] = {{li, 1.0}, {li - 1, -2.0}, {li - 2, 1.0}};
    for (auto [j, coef] : taps) {
      if (j < 0 || j >= static_cast<long>(red.m)) continue;
      for (const auto& t : red.rows[static_cast<std::size_t>(j)]) trip.emplace_back(row, t.param, coef * t.coef);
    }
  }
  SpMat B(static_cast<Eigen::Index>(pos_rows.size()), np);
  B.setFromTriplets(trip.begin(), trip.end());
  Vec winv2(B.rows()), zp(B.rows());
  for (Eigen::Index r = 0; r < B.rows(); ++r) {
    winv2(r) = 1.0 / w2[pos_rows[static_cast<std::size_t>(r)]];
    zp(r) = z[pos_rows[static_cast<std::size_t>(r)]];
  }

  GenLassoSolution sol;
  Vec v = Vec::Zero(np);
  if (np > 0 && p.lambda > 0.0) {
    Qp qp;
    SpMat DB = winv2.asDiagonal() * B;
    qp.Q = (SpMat(B.transpose()) * DB).pruned();
    qp.c = B.transpose() * zp;
    qp.lambda = p.lambda;
    const bool warm = opt.warm_start.size() == red.m;
    if (warm)
      for (Eigen::Index k = 0; k < np; ++k) v(k) = opt.warm_start[red.param_index[static_cast<std::size_t>(k)]];
    v = qp.project(v);

    // Scale of the projected gradient: the L z term of the dual.
    double lz = 0.0;
    for (std::size_t j = 0; j < red.m; ++j) {
      if (!positive[j] || !positive[j + 1] || !positive[j + 2]) continue;
      lz = std::max(lz, std::abs(z[j] - 2.0 * z[j + 1] + z[j + 2]));
    }
    // Below this the gradient Q v - c is rounding noise.
    double qnorm = 0.0;
    for (Eigen::Index col = 0; col < qp.Q.outerSize(); ++col) {
      double sum = 0.0;
      for (SpMat::InnerIterator it(qp.Q, col); it; ++it) sum += std::abs(it.value());
      qnorm = std::max(qnorm, sum);
    }
    const double floor = 100.0 * std::numeric_limits<double>::epsilon() *
                         (qnorm * p.lambda + qp.c.lpNorm<Eigen::Infinity>());
    auto res = solve_box_qp(qp, v, std::max(opt.tol * (1.0 + lz), floor), opt.max_iter, warm);
    v = res.v;
    sol.iterations = res.iterations;
    sol.converged = res.converged;
  } else {
    sol.converged = true;
  }
  sol.status = sol.converged ? GenLassoStatus::Converged : GenLassoStatus::MaxIter;

  sol.dual_u.assign(red.m, 0.0);
  for (std::size_t j = 0; j < red.m; ++j) {
    double s = 0.0;
    for (const auto& t : red.rows[j]) s += t.coef * v(t.param);
    sol.dual_u[j] = s;
  }
  const auto ltu = second_difference_adjoint(sol.dual_u);
  sol.tau.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (positive[i]) sol.tau[i] = z[i] - ltu[i] / w2[i];
  fill_gaps(sol.tau, positive);
  sol.kkt_residual = kkt_check(p, sol);
  return sol;
}

double kkt_check(const GenLassoProblem& p, const GenLassoSolution& s) {
  const std::size_t n = p.target.size();
  if (s.tau.size() != n || s.dual_u.size() + 2 != n) return std::numeric_limits<double>::infinity();
  const auto ltu = second_difference_adjoint(s.dual_u);
  double r = 0.0;
  std::vector<bool> positive(n);
  for (std::size_t i = 0; i < n; ++i) {
    positive[i] = p.weights[i] != 0.0 && std::isfinite(p.weights[i]);
    if (positive[i]) r = std::max(r, std::abs(p.weights[i] * p.weights[i] * (s.tau[i] - p.target[i]) + ltu[i]));
  }
  for (std::size_t j = 0; j + 2 < n; ++j) {
    const double u = s.dual_u[j];
    const double lt = s.tau[j] - 2.0 * s.tau[j + 1] + s.tau[j + 2];
    r = std::max(r, std::abs(u) - p.lambda);
    r = std::max(r, std::abs(u - std::clamp(u + lt, -p.lambda, p.lambda)));
    if (!positive[j + 1]) r = std::max(r, std::abs(lt));
  }
  return r;
}

double genlasso_objective(const GenLassoProblem& p, std::span<const double> tau) {
  double fit = 0.0, reg = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double w = p.weights[i];
    if (w == 0.0 || !std::isfinite(w)) continue;
    const double e = tau[i] - p.target[i];
    fit += w * w * e * e;
  }
  for (std::size_t j = 0; j + 2 < tau.size(); ++j) reg += std::abs(tau[j] - 2.0 * tau[j + 1] + tau[j + 2]);
  return 0.5 * fit + p.lambda * reg;
}

}  // namespace dnainv
