#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnainv {

/// min_tau 1/2 sum_{w_i != 0} w_i^2 (tau_i - target_i)^2 + lambda ||L tau||_1
///
/// Weights enter through their magnitude. Targets on zero-weight coordinates
/// are ignored and may be non-finite.
struct GenLassoProblem {
  std::vector<double> target;
  std::vector<double> weights;
  double lambda = 8.0;
};

enum class GenLassoStatus { Converged, MaxIter };

struct GenLassoOptions {
  double tol = 1e-8;
  std::size_t max_iter = 50000;
  /// Optional dual starting point (length n-2). The face it implies is tried
  /// first with a few active-set rounds.
  std::span<const double> warm_start = {};
};

struct GenLassoSolution {
  std::vector<double> tau;
  std::vector<double> dual_u;  // length n-2, |u_j| <= lambda
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  GenLassoStatus status = GenLassoStatus::Converged;
};

class GenLassoError : public std::runtime_error {
 public:
  enum class Kind { InvalidInput, RankDeficient };
  GenLassoError(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Solves the box-constrained dual
///
///   min_u 1/2 sum_{i in I+} (L^T u)_i^2 / w_i^2 - <L z, u>,  |u_j| <= lambda,
///   (L^T u)_i = 0 for i in I0,
///
/// with the equality constraints eliminated: on every zero-weight run [a, b]
/// the entries u_{a-2..b} are affine in the index, so only block endpoints
/// remain free. The reduced QP is solved by a primal-dual interior-point method
/// whose iterates are rounded to a face and polished by active-set rounds;
/// projected Newton steps finish the rare cases where that fails. The
/// tolerance is raised to the rounding level of Q v - c when Q is badly
/// scaled. Primal recovery:
/// tau_i = z_i - (L^T u)_i / w_i^2 on I+, linear across zero-weight runs.
///
/// Throws GenLassoError(RankDeficient) when fewer than two weights are nonzero.
GenLassoSolution solve_dual(const GenLassoProblem& p, const GenLassoOptions& opt = {});

/// max of: stationarity |w_i^2 (tau_i - z_i) + (L^T u)_i| on I+, box excess,
/// the complementarity residual |u_j - clamp(u_j + (L tau)_j, +-lambda)|, and
/// |(L tau)_j| on rows centered at zero-weight coordinates.
double kkt_check(const GenLassoProblem& p, const GenLassoSolution& s);

/// Primal objective value at tau.
double genlasso_objective(const GenLassoProblem& p, std::span<const double> tau);

/// (L^T u)_i = u_i - 2 u_{i-1} + u_{i-2}, out-of-range entries read as zero.
std::vector<double> second_difference_adjoint(std::span<const double> u);

}  // namespace dnainv
