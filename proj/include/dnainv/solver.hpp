#pragma once

#include "dnainv/forward.hpp"
#include "dnainv/genlasso.hpp"
#include "dnainv/preprocess.hpp"
#include "dnainv/profile.hpp"
#include "dnainv/pulse_model.hpp"

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnainv {

/// How candidates are ranked: F at the candidate's refit profile, or F at its
/// relaxed (regularized) solution.
enum class CandidateScore { Refit, Relaxed };

struct SolverParams {
  std::size_t s_A = 60;
  std::size_t m_A = 3;
  double lambda = 1e-3;
  double tol = 1e-8;
  std::size_t max_iter = 50000;
  BranchOptions branch;            // smoothing of z before inversion
  double zero_tol = 0.0;           // threshold for the zero set
  std::size_t refine_iters = 3;    // branch re-assignment rounds after selection
  std::size_t cluster_gap = 3;     // breakpoints this close are one knot in the refit
  std::size_t spacing = kDefaultBreakSpacing;  // minimal knot gap in the refit, borders included
  bool prune_knots = true;         // BIC backward elimination in the final refit
  double max_fork_speed = 5.0;     // kb/min; segments faster than this emit no fork
  CandidateScore score = CandidateScore::Refit;
};

struct CandidateResult {
  std::vector<int> d;
  double F = 0.0;        // at the relaxed solution
  double F_refit = std::numeric_limits<double>::infinity();  // at the refit profile, inf if the refit failed
  double kkt = 0.0;  // dual solve: kkt residual; pdps: last iterate change
  double ms = 0.0;
  bool ok = true;
  std::string error;
};

enum class EventKind { Origin, Terminus, SlopeChange, Fork };

const char* to_string(EventKind k) noexcept;
EventKind event_kind_from_string(const std::string& s);

struct Event {
  EventKind kind = EventKind::Fork;
  std::size_t index = 0;  // 0-based; knot for point events, segment midpoint for forks
  double time = 0.0;      // tau at index
  double speed = 0.0;     // kb/min, forks only
  int direction = 0;      // +1 toward increasing position, -1 otherwise
};

struct SolveReport {
  std::string solver = "dna-inverse";
  TimingProfile tau_star;              // after refit
  TimingProfile tau_star_regularized;  // winning relaxed solution
  std::vector<int> d_star;             // best-scoring candidate
  std::vector<int> d_refit;            // assignment used for the final profile
  double objective = 0.0;              // F at (d_star, regularized winner)
  double objective_refined = 0.0;      // F at (d_refit, tau_star)
  std::vector<CandidateResult> per_candidate;
  Breakpoints breakpoints;
  std::vector<Event> events;
  std::size_t windows = 0;
  double wall_ms = 0.0;
  bool degenerate = false;    // all-zero read, tau* = 0
  bool refit_failed = false;  // tau_star is the regularized solution
};

class SolveError : public std::runtime_error {
 public:
  enum class Kind { InvalidInput, NoCandidates, AllSolvesFailed };
  SolveError(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// 1/2 sum w_{d,i}^2 (tau_i - z^d_i)^2 over coordinates with a finite preimage
/// on the selected branch.
double objective_F(const BranchData& bd, std::span<const int> d, std::span<const double> tau);

/// Weighted generalized-lasso instance for assignment d.
GenLassoProblem make_problem(const BranchData& bd, std::span<const int> d, double lambda);

/// Continuous piecewise-linear least-squares fit to the branch targets of d.
/// Knots start from the breakpoints of tau_reg (clusters of breakpoints within
/// `cluster_gap` collapse to one knot). Knots are kept at least `spacing`
/// samples apart and away from the borders, dropping the cheaper knot of any
/// offending pair; each knot is then moved within its cluster span +-2 to the
/// position with the smallest F. With `prune`, knots are then removed one at a
/// time while n_w log(F_new / F_old) <= 2 log n_w (n_w weighted samples).
/// Throws std::invalid_argument when a segment lacks support.
std::vector<double> refit(const BranchData& bd, std::span<const int> d, std::span<const double> tau_reg,
                          std::size_t cluster_gap, std::size_t spacing = kDefaultBreakSpacing,
                          bool prune = false);

/// Origins and termini at slope sign changes, slope-change annotations
/// otherwise, and one fork per segment with |slope| >= min_slope.
std::vector<Event> extract_events(std::span<const double> tau, const Breakpoints& bp, double dx,
                                  double min_slope);

/// Solves the relaxed problem for every candidate assignment, keeps the best
/// according to params.score, then refines branches inside the oscillation
/// windows and refits a piecewise-linear profile.
SolveReport dna_inverse(const PulseModel& model, const Read& read, const SolverParams& params = {});

/// Fills cr.F (at tau) and, for CandidateScore::Refit, cr.F_refit (at the
/// unpruned refit of tau; left infinite when the refit fails).
void score_candidate(const BranchData& bd, const SolverParams& params, std::span<const double> tau,
                     CandidateResult& cr);

/// Index of the best successful candidate: smallest F_refit (falling back to F
/// where the refit failed) or smallest F, first one on ties. Returns
/// results.size() when none succeeded.
std::size_t select_candidate(std::span<const CandidateResult> results, CandidateScore score);

/// Throws SolveError(InvalidInput) unless the read has at least 6 samples,
/// finite nonnegative z and dx > 0.
void check_read(const Read& read);

/// For a read with every z_i <= zero_tol, fills rep with tau* = 0, d = 0 and
/// degenerate = true and returns true. Otherwise only sets the dx fields.
bool degenerate_report(const Read& read, double zero_tol, SolveReport& rep);

/// Shared final stage: refinement, refit, breakpoints and events. `reg` is the
/// winning relaxed profile for `d`. When `requadratic` is false, refinement
/// only re-runs the refit.
void finish_report(const PulseModel& model, const BranchData& bd, const CandidateSet& cs, const Read& read,
                   const SolverParams& params, bool requadratic, SolveReport& rep);

}  // namespace dnainv
