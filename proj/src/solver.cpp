#include "dnainv/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace dnainv {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Relaxed solutions carry |L tau| ~ solver tolerance on flat stretches.
double regularized_break_tol(std::span<const double> tau) {
  double m = 0.0;
  for (double v : tau) m = std::max(m, std::abs(v));
  return 1e-6 * (1.0 + m);
}

// Re-derives d inside the oscillation windows from which side of tau0 tau
// lies on, keeping the current branch where the other preimage is empty.
std::vector<int> reassign(const PulseModel& model, const BranchData& bd, const CandidateSet& cs,
                          std::span<const int> d, std::span<const double> tau) {
  std::vector<int> out(d.begin(), d.end());
  for (const auto& w : cs.windows) {
    for (std::size_t i = w.begin; i <= w.end && i < out.size(); ++i) {
      const int want = tau[i] > model.tau0() ? 1 : 0;
      if (std::isfinite(want ? bd.z1[i] : bd.z0[i])) out[i] = want;
    }
  }
  for (auto i : cs.zero)
    if (i < out.size()) out[i] = 0;
  return out;
}

std::vector<double> fit_with_knots(const BranchData& bd, std::span<const int> d,
                                   const std::vector<std::size_t>& knots) {
  const std::size_t n = bd.size();
  std::vector<double> w(n), t(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = bd.weight(d[i], i);
    t[i] = w[i] != 0.0 ? bd.target(d[i], i) : 0.0;
  }
  Breakpoints bp;
  bp.indices.push_back(0);
  bp.indices.insert(bp.indices.end(), knots.begin(), knots.end());
  bp.indices.push_back(n - 1);
  return refit_piecewise_linear(bp, w, t);
}

// Inside each window, tries every pattern with at most one transition (either
// polarity) against a fit with fixed knots and keeps the cheapest. Patterns that
// pick an empty preimage where the other branch has one are skipped.
std::vector<int> scan_transitions(const BranchData& bd, const CandidateSet& cs, std::vector<int> d,
                                  const std::vector<std::size_t>& knots) {
  auto cost = [&](const std::vector<int>& dd) {
    try {
      return objective_F(bd, dd, fit_with_knots(bd, dd, knots));
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  std::vector<bool> forced(d.size(), false);
  for (auto i : cs.zero)
    if (i < forced.size()) forced[i] = true;
  double best_f = cost(d);
  for (const auto& w : cs.windows) {
    const std::size_t end = std::min(w.end, d.size() - 1);
    std::vector<int> best = d;
    for (int a = 0; a < 2; ++a) {
      for (std::size_t p = w.begin; p <= end + 1; ++p) {
        std::vector<int> nd = d;
        bool usable = true;
        for (std::size_t i = w.begin; i <= end && usable; ++i) {
          nd[i] = forced[i] ? 0 : (i < p ? a : 1 - a);
          const bool has = std::isfinite(nd[i] ? bd.z1[i] : bd.z0[i]);
          const bool other = std::isfinite(nd[i] ? bd.z0[i] : bd.z1[i]);
          usable = has || !other;
        }
        if (!usable || nd == best) continue;
        const double f = cost(nd);
        if (f < best_f) {
          best_f = f;
          best = std::move(nd);
        }
      }
    }
    d = std::move(best);
  }
  return d;
}

}  // namespace

const char* to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::Origin: return "origin";
    case EventKind::Terminus: return "terminus";
    case EventKind::SlopeChange: return "slope_change";
    case EventKind::Fork: return "fork";
  }
  return "fork";
}

EventKind event_kind_from_string(const std::string& s) {
  if (s == "origin") return EventKind::Origin;
  if (s == "terminus") return EventKind::Terminus;
  if (s == "slope_change") return EventKind::SlopeChange;
  if (s == "fork") return EventKind::Fork;
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

double objective_F(const BranchData& bd, std::span<const int> d, std::span<const double> tau) {
  double f = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double w = bd.weight(d[i], i);
    const double z = bd.target(d[i], i);
    if (w == 0.0 || !std::isfinite(z)) continue;
    f += w * w * (tau[i] - z) * (tau[i] - z);
  }
  return 0.5 * f;
}

GenLassoProblem make_problem(const BranchData& bd, std::span<const int> d, double lambda) {
  GenLassoProblem p;
  p.lambda = lambda;
  const std::size_t n = bd.size();
  p.target.resize(n);
  p.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.weights[i] = bd.weight(d[i], i);
    p.target[i] = bd.target(d[i], i);
  }
  return p;
}

std::vector<double> refit(const BranchData& bd, std::span<const int> d, std::span<const double> tau_reg,
                          std::size_t cluster_gap, std::size_t spacing, bool prune) {
  const std::size_t n = bd.size();
  const auto bp = breakpoints(tau_reg, regularized_break_tol(tau_reg));
  const auto inner = bp.interior();
  const auto lt = second_difference(tau_reg);

  struct Cluster {
    std::size_t lo, hi, knot;
  };
  // Knots may not come closer than `spacing` to each other or to the borders.
  const bool room = n > 2 * spacing;
  const std::size_t kmin = spacing, kmax = room ? n - 1 - spacing : 0;
  std::vector<Cluster> clusters;
  for (std::size_t k = 0; k < inner.size() && room;) {
    std::size_t e = k;
    while (e + 1 < inner.size() && inner[e + 1] - inner[e] <= cluster_gap) ++e;
    double mass = 0.0, moment = 0.0;
    for (std::size_t j = k; j <= e; ++j) {
      const double a = std::abs(lt[inner[j] - 1]);
      mass += a;
      moment += a * static_cast<double>(inner[j]);
    }
    const auto center = static_cast<std::size_t>(std::llround(moment / mass));
    const std::size_t lo = std::clamp<std::size_t>(inner[k] >= 2 ? inner[k] - 2 : 0, kmin, kmax);
    const std::size_t hi = std::clamp<std::size_t>(inner[e] + 2, kmin, kmax);
    clusters.push_back({lo, hi, std::clamp(center, lo, hi)});
    k = e + 1;
  }

  auto knots_of = [](const std::vector<Cluster>& cl) {
    std::vector<std::size_t> ks;
    for (const auto& c : cl) ks.push_back(c.knot);
    return ks;
  };
  auto score = [&](const std::vector<std::size_t>& ks, std::vector<double>& out) {
    try {
      out = fit_with_knots(bd, d, ks);
      return objective_F(bd, d, out);
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // Resolve spacing violations by dropping whichever knot of the closest
  // offending pair costs less; the survivor inherits the dropped span.
  for (;;) {
    std::size_t bad = clusters.size();
    for (std::size_t c = 0; c + 1 < clusters.size() && bad == clusters.size(); ++c)
      if (clusters[c + 1].knot - clusters[c].knot < spacing) bad = c;
    if (bad == clusters.size()) break;
    std::vector<double> tmp;
    auto drop_left = clusters, drop_right = clusters;
    drop_left[bad + 1].lo = std::min(drop_left[bad].lo, drop_left[bad + 1].lo);
    drop_left.erase(drop_left.begin() + static_cast<std::ptrdiff_t>(bad));
    drop_right[bad].hi = std::max(drop_right[bad].hi, drop_right[bad + 1].hi);
    drop_right.erase(drop_right.begin() + static_cast<std::ptrdiff_t>(bad) + 1);
    clusters = score(knots_of(drop_left), tmp) <= score(knots_of(drop_right), tmp) ? drop_left : drop_right;
  }

  std::vector<double> best;
  double best_f = score(knots_of(clusters), best);
  auto snap = [&](int sweeps) {
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      bool moved = false;
      for (std::size_t c = 0; c < clusters.size(); ++c) {
        const std::size_t lo = c > 0 ? std::max(clusters[c].lo, clusters[c - 1].knot + spacing) : clusters[c].lo;
        const std::size_t hi =
            c + 1 < clusters.size() ? std::min(clusters[c].hi, clusters[c + 1].knot - spacing) : clusters[c].hi;
        std::size_t cur = clusters[c].knot;
        for (std::size_t pos = lo; pos <= hi; ++pos) {
          if (pos == cur) continue;
          clusters[c].knot = pos;
          std::vector<double> trial;
          const double f = score(knots_of(clusters), trial);
          if (f < best_f) {
            best_f = f;
            best = std::move(trial);
            cur = pos;
            moved = true;
          }
        }
        clusters[c].knot = cur;
      }
      if (!moved) break;
    }
  };
  snap(2);

  if (prune && std::isfinite(best_f)) {
    // Backward elimination with a BIC rule, two parameters per knot.
    double nw = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (bd.weight(d[i], i) != 0.0 && std::isfinite(bd.target(d[i], i))) nw += 1.0;
    const double cost = 2.0 * std::log(std::max(nw, 2.0));
    bool removed = false;
    while (!clusters.empty()) {
      std::size_t drop = clusters.size();
      double drop_f = std::numeric_limits<double>::infinity();
      std::vector<double> drop_fit;
      for (std::size_t c = 0; c < clusters.size(); ++c) {
        auto trial = clusters;
        trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(c));
        std::vector<double> fit;
        const double f = score(knots_of(trial), fit);
        if (f < drop_f) {
          drop_f = f;
          drop = c;
          drop_fit = std::move(fit);
        }
      }
      if (drop == clusters.size()) break;
      const bool cheaper = drop_f <= best_f || nw * std::log(drop_f / best_f) <= cost;
      if (!cheaper) break;
      clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(drop));
      best_f = drop_f;
      best = std::move(drop_fit);
      removed = true;
    }
    if (removed) snap(1);
  }
  if (!std::isfinite(best_f)) best = fit_with_knots(bd, d, knots_of(clusters));  // throws with the reason
  return best;
}

std::vector<Event> extract_events(std::span<const double> tau, const Breakpoints& bp, double dx,
                                  double min_slope) {
  std::vector<Event> out;
  const auto& k = bp.indices;
  if (k.size() < 2) return out;
  std::vector<double> slope(k.size() - 1);
  for (std::size_t s = 0; s + 1 < k.size(); ++s)
    slope[s] = (tau[k[s + 1]] - tau[k[s]]) / static_cast<double>(k[s + 1] - k[s]);
  auto sgn = [](double v) { return v > 1e-12 ? 1 : (v < -1e-12 ? -1 : 0); };

  for (std::size_t s = 0; s + 1 < slope.size(); ++s) {
    Event e;
    e.index = k[s + 1];
    e.time = tau[e.index];
    const int a = sgn(slope[s]), b = sgn(slope[s + 1]);
    e.kind = (a < 0 && b > 0) ? EventKind::Origin : (a > 0 && b < 0) ? EventKind::Terminus : EventKind::SlopeChange;
    out.push_back(e);
  }
  for (std::size_t s = 0; s < slope.size(); ++s) {
    if (std::abs(slope[s]) < min_slope || slope[s] == 0.0) continue;
    Event e;
    e.kind = EventKind::Fork;
    e.index = (k[s] + k[s + 1]) / 2;
    e.time = tau[e.index];
    e.speed = dx / std::abs(slope[s]);
    e.direction = slope[s] > 0 ? 1 : -1;
    out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(), [](const Event& x, const Event& y) { return x.index < y.index; });
  return out;
}

void finish_report(const PulseModel& model, const BranchData& bd, const CandidateSet& cs, const Read& read,
                   const SolverParams& params, bool requadratic, SolveReport& rep) {
  std::vector<int> d = rep.d_star;
  std::vector<double> reg = rep.tau_star_regularized.values;
  double f = rep.objective;

  if (requadratic) {
    GenLassoOptions opt;
    opt.tol = params.tol;
    opt.max_iter = params.max_iter;
    for (std::size_t it = 0; it < params.refine_iters; ++it) {
      auto nd = reassign(model, bd, cs, d, reg);
      if (nd == d) break;
      try {
        auto sol = solve_dual(make_problem(bd, nd, params.lambda), opt);
        const double nf = objective_F(bd, nd, sol.tau);
        if (!(nf <= f)) break;
        d = std::move(nd);
        reg = std::move(sol.tau);
        f = nf;
      } catch (const GenLassoError&) {
        break;
      }
    }
  }

  std::vector<double> tau;
  try {
    tau = refit(bd, d, reg, params.cluster_gap, params.spacing, params.prune_knots);
    double tf = objective_F(bd, d, tau);
    for (std::size_t it = 0; it < params.refine_iters; ++it) {
      auto nd = reassign(model, bd, cs, d, tau);
      if (nd == d) break;
      std::vector<double> nt;
      try {
        nt = refit(bd, nd, reg, params.cluster_gap, params.spacing, params.prune_knots);
      } catch (const std::invalid_argument&) {
        break;
      }
      const double nf = objective_F(bd, nd, nt);
      if (!(nf <= tf)) break;
      d = std::move(nd);
      tau = std::move(nt);
      tf = nf;
    }
    for (std::size_t it = 0; it < params.refine_iters; ++it) {
      const auto knots = breakpoints(tau, regularized_break_tol(tau)).interior();
      auto nd = scan_transitions(bd, cs, d, knots);
      if (nd == d) break;
      std::vector<double> nt;
      try {
        nt = refit(bd, nd, tau, params.cluster_gap, params.spacing, params.prune_knots);
      } catch (const std::invalid_argument&) {
        break;
      }
      const double nf = objective_F(bd, nd, nt);
      if (!(nf <= tf)) break;
      d = std::move(nd);
      tau = std::move(nt);
      tf = nf;
    }
  } catch (const std::invalid_argument&) {
    rep.refit_failed = true;
    tau = reg;
  }

  rep.d_refit = d;
  rep.tau_star.values = tau;
  rep.tau_star.dx = read.dx;
  rep.objective_refined = objective_F(bd, d, tau);
  rep.breakpoints = breakpoints(tau, rep.refit_failed ? regularized_break_tol(tau) : default_break_tol(tau));
  rep.events = extract_events(tau, rep.breakpoints, read.dx, read.dx / params.max_fork_speed);
}

void score_candidate(const BranchData& bd, const SolverParams& params, std::span<const double> tau,
                     CandidateResult& cr) {
  cr.F = objective_F(bd, cr.d, tau);
  cr.F_refit = std::numeric_limits<double>::infinity();
  if (params.score != CandidateScore::Refit) return;
  try {
    cr.F_refit = objective_F(bd, cr.d, refit(bd, cr.d, tau, params.cluster_gap, params.spacing));
  } catch (const std::invalid_argument&) {
  }
}

std::size_t select_candidate(std::span<const CandidateResult> results, CandidateScore score) {
  auto key = [&](const CandidateResult& r) {
    return score == CandidateScore::Refit && std::isfinite(r.F_refit) ? r.F_refit : r.F;
  };
  std::size_t best = results.size();
  for (std::size_t c = 0; c < results.size(); ++c) {
    if (!results[c].ok) continue;
    if (best == results.size() || key(results[c]) < key(results[best])) best = c;
  }
  return best;
}

void check_read(const Read& read) {
  if (read.z.size() < 6)
    throw SolveError(SolveError::Kind::InvalidInput, "read '" + read.id + "': need at least 6 samples");
  for (double v : read.z)
    if (!std::isfinite(v) || v < 0.0)
      throw SolveError(SolveError::Kind::InvalidInput, "read '" + read.id + "': z must be finite and >= 0");
  if (!(read.dx > 0.0)) throw SolveError(SolveError::Kind::InvalidInput, "read '" + read.id + "': dx must be > 0");
}

bool degenerate_report(const Read& read, double zero_tol, SolveReport& rep) {
  const std::size_t n = read.z.size();
  rep.tau_star_regularized.dx = read.dx;
  rep.tau_star.dx = read.dx;
  if (!std::all_of(read.z.begin(), read.z.end(), [&](double v) { return v <= zero_tol; })) return false;
  rep.degenerate = true;
  rep.tau_star.values.assign(n, 0.0);
  rep.tau_star_regularized.values.assign(n, 0.0);
  rep.d_star.assign(n, 0);
  rep.d_refit.assign(n, 0);
  rep.breakpoints = breakpoints(rep.tau_star.values, 0.0);
  return true;
}

SolveReport dna_inverse(const PulseModel& model, const Read& read, const SolverParams& params) {
  const auto t0 = Clock::now();
  check_read(read);
  SolveReport rep;
  rep.solver = "dna-inverse";
  if (degenerate_report(read, params.zero_tol, rep)) {
    rep.wall_ms = ms_since(t0);
    return rep;
  }

  const auto bd = branch_data(model, read.z, params.branch);
  const auto zero = zero_set(read.z, params.zero_tol);
  const auto cs = candidate_set(bd, zero, params.s_A, params.m_A);
  if (cs.candidates.empty())
    throw SolveError(SolveError::Kind::NoCandidates, "read '" + read.id + "': empty candidate set");
  rep.windows = cs.windows.size();

  GenLassoOptions opt;
  opt.tol = params.tol;
  opt.max_iter = params.max_iter;
  std::vector<std::vector<double>> taus(cs.candidates.size());
  for (std::size_t c = 0; c < cs.candidates.size(); ++c) {
    const auto tc = Clock::now();
    CandidateResult cr;
    cr.d = cs.candidates[c];
    try {
      auto sol = solve_dual(make_problem(bd, cr.d, params.lambda), opt);
      cr.kkt = sol.kkt_residual;
      score_candidate(bd, params, sol.tau, cr);
      taus[c] = std::move(sol.tau);
    } catch (const GenLassoError& e) {
      cr.ok = false;
      cr.error = e.what();
      cr.F = std::numeric_limits<double>::infinity();
    }
    cr.ms = ms_since(tc);
    rep.per_candidate.push_back(std::move(cr));
  }
  const std::size_t best = select_candidate(rep.per_candidate, params.score);
  if (best == rep.per_candidate.size())
    throw SolveError(SolveError::Kind::AllSolvesFailed,
                     "read '" + read.id + "': every candidate failed: " + rep.per_candidate.front().error);

  rep.d_star = rep.per_candidate[best].d;
  rep.objective = rep.per_candidate[best].F;
  rep.tau_star_regularized.values = std::move(taus[best]);
  finish_report(model, bd, cs, read, params, true, rep);
  rep.wall_ms = ms_since(t0);
  return rep;
}

}  // namespace dnainv
