#pragma once

#include "dnainv/forward.hpp"
#include "dnainv/pulse_model.hpp"
#include "dnainv/solver.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnainv {

class PdpsError : public std::runtime_error {
 public:
  enum class Kind { InvalidConfig, InvalidInput, Diverged };
  PdpsError(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Primal-dual proximal splitting for
///
///   min_tau ||z - Psi(tau)||^2 + gamma ||L tau||_1
///
/// written as min_tau max_y gamma ||L tau||_1 + <Psi(tau), y> - G*(y) with
/// G(u) = ||u - z||^2, G*(y) = ||y||^2 / 4 + <y, z>.
struct PdpsConfig {
  double gamma = 1.0;
  double sigma1 = 0.6;
  double sigma2 = 1.0;
  double L_psi = 1.0;        // Lipschitz estimate of Psi
  double L_psi_prime = 1.0;  // Lipschitz estimate of Psi'
  double rho_y = 1.0;        // radius estimate for the dual iterates
  double stop_tol = 1e-5;    // on ||tau_k - tau_{k+1}||_2 and ||y_k - y_{k+1}||_2
  std::size_t max_iter = 5000;
  double inner_tol = 1e-9;   // primal prox solve
  std::size_t history_every = 100;

  /// Throws PdpsError(InvalidConfig) unless sigma1, sigma2 > 0, gamma >= 0 and
  /// sigma1 <= 1 / (sigma2 L_psi^2 + L_psi_prime rho_y / 2).
  void validate() const;
};

struct PdpsHistoryPoint {
  std::size_t iteration = 0;
  double objective = 0.0;
};

struct PdpsResult {
  std::vector<double> tau;
  std::vector<double> y;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double last_step = 0.0;  // ||tau_k - tau_{k+1}||_2 at exit
  std::vector<PdpsHistoryPoint> history;  // iteration 0, every history_every, and the last
};

/// ||z - Psi(tau)||^2 + gamma ||L tau||_1.
double pdps_objective(const PulseModel& model, std::span<const double> z, std::span<const double> tau,
                      double gamma);

/// Iterates
///   tau+ = prox_{sigma1 gamma ||L.||_1}(tau - sigma1 Psi'(tau) y)
///   y+   = (y + sigma2 (2 Psi(tau+) - Psi(tau) - z)) / (1 + sigma2 / 2)
/// from (tau_init, 0). The second line is the closed-form prox of sigma2 G*
/// at the over-relaxed point. Throws PdpsError(Diverged) when an iterate norm
/// exceeds 1e8.
PdpsResult pdps_solve(const PulseModel& model, std::span<const double> z, std::span<const double> tau_init,
                      const PdpsConfig& cfg = {});

/// Replaces non-finite entries by linear interpolation between the nearest
/// finite neighbours and by the nearest finite value at the ends. All
/// non-finite input gives zeros.
std::vector<double> fill_markers(std::span<const double> v);

/// PDPS penalty that matches dna_inverse at `lambda`: the dual method weighs
/// its data term by 1/2, pdps_objective does not.
constexpr double matched_gamma(double lambda) noexcept { return 2.0 * lambda; }

struct PdpsParams {
  SolverParams solver;
  PdpsConfig pdps;
};

/// Runs pdps_solve from each candidate's branch inverse, ranks candidates like
/// dna_inverse and finishes with the same refit stage.
SolveReport adapted_pdps(const PulseModel& model, const Read& read, const PdpsParams& params = {});

}  // namespace dnainv
