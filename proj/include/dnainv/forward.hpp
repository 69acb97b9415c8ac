#pragma once

#include "dnainv/profile.hpp"
#include "dnainv/pulse_model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dnainv {

/// One observed incorporation signal along a molecule.
struct Read {
  std::string id;
  std::vector<double> z;
  double dx = 0.1;
  std::optional<std::vector<double>> tau_true;
  std::optional<std::vector<int>> d_true;
};

/// Coordinatewise image (psi(tau_1), ..., psi(tau_n)).
std::vector<double> forward(const PulseModel& model, std::span<const double> tau);

/// Diagonal of the Jacobian of the coordinatewise operator at tau.
std::vector<double> forward_jacobian_diagonal(const PulseModel& model, std::span<const double> tau);

/// d_i = 1 iff tau_i > tau0.
std::vector<int> true_branches(const PulseModel& model, std::span<const double> tau);

/// Number of i with tau_i and tau_{i+1} on strictly opposite sides of `level`.
std::size_t count_crossings(std::span<const double> tau, double level);

enum class CrossingPolicy {
  Free,       // random nonzero slopes, tau kept in [tau_min, tau_max]
  VShape,     // one dip below tau0 whose arms cross tau0: exactly 2 crossings
  BelowPeak,  // stays strictly inside (0, tau0): no crossing
  ZeroRuns,   // allowed to dip below 0; nonnegativity is not enforced
};

struct ProfileSpec {
  std::size_t n = 300;
  std::size_t breaks = 2;                    // C
  std::size_t spacing = kDefaultBreakSpacing;
  double slope_min = 0.02;                   // min per sample
  double slope_max = 0.08;
  double tau_min = 0.05;
  double tau_max = 8.0;
  CrossingPolicy policy = CrossingPolicy::Free;
  std::size_t min_crossing_gap = 60;         // index gap between consecutive tau0 crossings
};

/// Random piecewise-linear profile with exactly `spec.breaks` knots whose
/// index gaps (borders included) are at least `spec.spacing` and whose tau0
/// crossings are at least `spec.min_crossing_gap` apart. Deterministic
/// per seed; the result is checked against `membership` before returning.
/// Throws std::invalid_argument for infeasible specs.
TimingProfile generate_profile(std::uint64_t seed, const ProfileSpec& spec, const PulseModel& model,
                               double dx = 0.1);

enum class NoiseKind { Gaussian, BinomialThinning };

/// Gaussian: z_i = max(0, z_i + N(0, s^2)) with s = sigma, or 0.1 sigma on exact
/// zeros. Binomial thinning: z_i = Binomial(K, z_i / psi_max) / K * psi_max with
/// K = round(psi_max^2 / sigma^2).
std::vector<double> add_noise(std::span<const double> clean, std::uint64_t seed, double sigma,
                              NoiseKind kind, double psi_max);

struct SimulationSpec {
  ProfileSpec profile;
  double sigma = 0.0;
  NoiseKind noise = NoiseKind::BinomialThinning;
  double dx = 0.1;
};

/// Independent seed for sub-stream `stream` of `seed` (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Synthetic read with ground truth; profile and noise use independent streams
/// derived from `seed`.
Read simulate_read(const PulseModel& model, const SimulationSpec& spec, std::uint64_t seed,
                   std::string id);

}  // namespace dnainv
