#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dnainv {

/// Minimum number of samples between consecutive break indices (borders
/// included) for profiles in the identifiable class.
inline constexpr std::size_t kDefaultBreakSpacing = 12;

/// Replication times on an equispaced grid of n positions.
struct TimingProfile {
  std::vector<double> values;  // minutes
  double dx = 0.1;             // kb per sample

  std::size_t size() const noexcept { return values.size(); }
};

/// Break indices of a profile, borders included.
///
/// Indices are 0-based here; files and reports carry them 1-based.
struct Breakpoints {
  std::vector<std::size_t> indices;  // (0, i_1, ..., i_p, n-1)

  std::size_t count() const noexcept { return indices.size() < 2 ? 0 : indices.size() - 2; }
  std::vector<std::size_t> interior() const;
};

struct Membership {
  bool in_pc = false;      // at most C breakpoints
  bool in_pc_neq = false;  // ... and nonnegative, no constant steps
  bool in_pc_geq = false;  // ... and break gaps >= spacing
};

/// (L tau)_j = tau_j - 2 tau_{j+1} + tau_{j+2}, length n-2. Throws for n < 3.
std::vector<double> second_difference(std::span<const double> tau);

/// Scale-aware zero threshold for second differences: 1e-9 (1 + max|tau|).
double default_break_tol(std::span<const double> tau);

/// Interior index i is a break iff |(L tau)_{i-1}| > tol.
Breakpoints breakpoints(std::span<const double> tau, double tol);

Membership membership(std::span<const double> tau, std::size_t max_breaks, double tol,
                      std::size_t spacing = kDefaultBreakSpacing);

/// Weighted least-squares continuous piecewise-linear fit with knots fixed at
/// the interior break indices of `bp`.
///
/// Minimizes sum_i w_i^2 (tau_i - target_i)^2 over profiles linear between
/// consecutive knots. Zero-weight entries (and their targets, which may be
/// non-finite) do not influence the result. Throws std::invalid_argument when
/// a segment has fewer than two positively weighted samples.
std::vector<double> refit_piecewise_linear(const Breakpoints& bp, std::span<const double> weights,
                                           std::span<const double> targets);

}  // namespace dnainv
