#pragma once

#include "dnainv/pulse_model.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace dnainv {

/// Marker for an empty branch preimage.
inline constexpr double kNoPreimage = std::numeric_limits<double>::infinity();

/// Uniform moving average; near the borders the window shrinks symmetrically.
/// Throws std::invalid_argument for even or < 3 windows.
std::vector<double> smooth(std::span<const double> z, std::size_t window = 5);

struct BranchData {
  std::vector<double> z0, z1;  // branch inverses, kNoPreimage where empty
  std::vector<double> w0, w1;  // psi' at the inverses; w0 >= 0, w1 <= 0, 0 where empty
  std::vector<double> h;       // z1 - z0 where both finite

  std::size_t size() const noexcept { return z0.size(); }
  /// Branch-selected target and weight magnitude for coordinate i.
  double target(int d, std::size_t i) const noexcept { return d ? z1[i] : z0[i]; }
  double weight(int d, std::size_t i) const noexcept { return d ? -w1[i] : w0[i]; }
};

struct BranchOptions {
  bool smoothing = false;
  std::size_t window = 5;
  double weight_floor = 1e-4;  // relative to the largest |w|
};

/// Per-coordinate inverses and weights, computed from smooth(z) when enabled.
BranchData branch_data(const PulseModel& model, std::span<const double> z, const BranchOptions& opt = {});

/// Indices i with z_i <= tol and z_{i+1} <= tol (0-based).
std::vector<std::size_t> zero_set(std::span<const double> z, double tol = 0.0);

/// Inclusive index interval.
struct Window {
  std::size_t begin = 0, end = 0, center = 0;
};

struct CandidateSet {
  std::vector<Window> windows;
  std::vector<std::size_t> zero;
  std::vector<std::vector<int>> candidates;  // sorted lexicographically, unique
  std::size_t s_A = 60, m_A = 3;

  std::size_t bound() const;  // 2 (m_A + 1)^k
};

/// Centers of oscillation windows: finite h_i that is the minimum (first one on
/// ties) of the finite entries within +-s_A/2, has finite entries on both
/// sides, and lies at or below median - MAD/2 of the finite entries. A border
/// entry b qualifies without the missing side when h[b] is at most one of the
/// two steps next to it, h[b'] - h[b] or h[b''] - h[b'] (b', b'' its inner
/// neighbours): h would reach zero within one more sample. A border entry
/// failing that test is ignored when deciding whether an entry further in is
/// the minimum, except by its direct neighbour.
std::vector<std::size_t> local_minima(std::span<const double> h, std::size_t s_A);

/// Windows of width s_A around each center, clipped to the read; windows that
/// overlap by more than s_A/2 are merged.
std::vector<Window> oscillation_windows(std::span<const double> h, std::size_t s_A);

/// Transition positions for a window: p such that d_p != d_{p-1}.
std::vector<std::size_t> transition_offsets(const Window& w, std::size_t s_A, std::size_t m_A);

/// Reduced set of branch assignments. Windows ending within s_A/(2 m_A) of a
/// border are extended to it. Each window carries either no flip or a
/// flip at one of its m_A offsets; the leftmost value is 0 or 1. Candidates
/// with d_i != 0 on the zero set are dropped.
CandidateSet candidate_set(const BranchData& bd, std::span<const std::size_t> zero, std::size_t s_A = 60,
                           std::size_t m_A = 3);

/// True iff d is constant between consecutive windows and across every index
/// outside windows, and d_i == 0 on the zero set.
bool respects_constraints(std::span<const int> d, const CandidateSet& cs);

}  // namespace dnainv
