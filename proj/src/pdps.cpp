#include "dnainv/pdps.hpp"

#include "dnainv/genlasso.hpp"
#include "dnainv/preprocess.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace dnainv {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void PdpsConfig::validate() const {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
    throw PdpsError(PdpsError::Kind::InvalidConfig, "pdps: step sizes must be > 0");
  if (!(gamma >= 0.0)) throw PdpsError(PdpsError::Kind::InvalidConfig, "pdps: gamma must be >= 0");
  if (!(L_psi >= 0.0) || !(L_psi_prime >= 0.0) || !(rho_y >= 0.0))
    throw PdpsError(PdpsError::Kind::InvalidConfig, "pdps: Lipschitz and radius estimates must be >= 0");
  const double bound = 1.0 / (sigma2 * L_psi * L_psi + 0.5 * L_psi_prime * rho_y);
  if (sigma1 > bound)
    throw PdpsError(PdpsError::Kind::InvalidConfig,
                    "pdps: sigma1 = " + std::to_string(sigma1) + " exceeds 1/(sigma2 L^2 + L' rho/2) = " +
                        std::to_string(bound));
  if (!(stop_tol > 0.0) || max_iter == 0)
    throw PdpsError(PdpsError::Kind::InvalidConfig, "pdps: stop_tol and max_iter must be positive");
}

double pdps_objective(const PulseModel& model, std::span<const double> z, std::span<const double> tau,
                      double gamma) {
  double f = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = z[i] - model.eval(tau[i]);
    f += r * r;
  }
  for (std::size_t i = 0; i + 2 < tau.size(); ++i) f += gamma * std::abs(tau[i] - 2.0 * tau[i + 1] + tau[i + 2]);
  return f;
}

PdpsResult pdps_solve(const PulseModel& model, std::span<const double> z, std::span<const double> tau_init,
                      const PdpsConfig& cfg) {
  cfg.validate();
  const std::size_t n = z.size();
  if (tau_init.size() != n) throw PdpsError(PdpsError::Kind::InvalidInput, "pdps: tau_init/z length mismatch");
  if (n < 3) throw PdpsError(PdpsError::Kind::InvalidInput, "pdps: need at least 3 samples");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(z[i]) || !std::isfinite(tau_init[i]))
      throw PdpsError(PdpsError::Kind::InvalidInput, "pdps: z and tau_init must be finite");

  PdpsResult res;
  res.tau.assign(tau_init.begin(), tau_init.end());
  res.y.assign(n, 0.0);
  res.history.push_back({0, pdps_objective(model, z, res.tau, cfg.gamma)});

  GenLassoProblem prox;
  prox.weights.assign(n, 1.0);
  prox.target.resize(n);
  prox.lambda = cfg.sigma1 * cfg.gamma;
  GenLassoOptions opt;
  opt.tol = cfg.inner_tol;
  std::vector<double> dual;  // warm start for the prox
  std::vector<double> psi_old = forward(model, res.tau), step(n);

  for (std::size_t k = 1; k <= cfg.max_iter; ++k) {
    for (std::size_t i = 0; i < n; ++i) prox.target[i] = res.tau[i] - cfg.sigma1 * model.derivative(res.tau[i]) * res.y[i];
    std::vector<double> next;
    if (prox.lambda > 0.0) {
      opt.warm_start = dual;
      auto sol = solve_dual(prox, opt);
      next = std::move(sol.tau);
      dual = std::move(sol.dual_u);
    } else {
      next = prox.target;
    }
    const auto psi_new = forward(model, next);
    double dual_step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = (res.y[i] + cfg.sigma2 * (2.0 * psi_new[i] - psi_old[i] - z[i])) / (1.0 + 0.5 * cfg.sigma2);
      dual_step += (y - res.y[i]) * (y - res.y[i]);
      res.y[i] = y;
      step[i] = next[i] - res.tau[i];
    }
    res.tau = std::move(next);
    psi_old = psi_new;
    res.iterations = k;

    const double tn = norm2(res.tau), yn = norm2(res.y);
    if (!std::isfinite(tn) || !std::isfinite(yn) || tn > 1e8 || yn > 1e8)
      throw PdpsError(PdpsError::Kind::Diverged, "pdps: iterates diverged at iteration " + std::to_string(k));
    res.last_step = norm2(step);
    // A still-moving dual means the primal step is about to change.
    const bool done = res.last_step <= cfg.stop_tol && std::sqrt(dual_step) <= cfg.stop_tol;
    if (done || k == cfg.max_iter || (cfg.history_every > 0 && k % cfg.history_every == 0))
      res.history.push_back({k, pdps_objective(model, z, res.tau, cfg.gamma)});
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.objective = res.history.back().objective;
  return res;
}

std::vector<double> fill_markers(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<double> out(v.begin(), v.end());
  std::size_t first = n, last = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(v[i])) continue;
    if (first == n) first = i;
    last = i;
  }
  if (first == n) return std::vector<double>(n, 0.0);
  for (std::size_t i = 0; i < first; ++i) out[i] = v[first];
  for (std::size_t i = last + 1; i < n; ++i) out[i] = v[last];
  std::size_t prev = first;
  for (std::size_t i = first + 1; i <= last; ++i) {
    if (!std::isfinite(v[i])) continue;
    for (std::size_t j = prev + 1; j < i; ++j) {
      const double t = static_cast<double>(j - prev) / static_cast<double>(i - prev);
      out[j] = (1.0 - t) * v[prev] + t * v[i];
    }
    prev = i;
  }
  return out;
}

SolveReport adapted_pdps(const PulseModel& model, const Read& read, const PdpsParams& params) {
  const auto t0 = Clock::now();
  params.pdps.validate();
  check_read(read);
  SolveReport rep;
  rep.solver = "pdps-adapted";
  if (degenerate_report(read, params.solver.zero_tol, rep)) {
    rep.wall_ms = ms_since(t0);
    return rep;
  }

  const auto bd = branch_data(model, read.z, params.solver.branch);
  const auto cs = candidate_set(bd, zero_set(read.z, params.solver.zero_tol), params.solver.s_A, params.solver.m_A);
  if (cs.candidates.empty())
    throw SolveError(SolveError::Kind::NoCandidates, "read '" + read.id + "': empty candidate set");
  rep.windows = cs.windows.size();

  std::vector<std::vector<double>> taus(cs.candidates.size());
  for (std::size_t c = 0; c < cs.candidates.size(); ++c) {
    const auto tc = Clock::now();
    CandidateResult cr;
    cr.d = cs.candidates[c];
    std::vector<double> init(read.z.size());
    for (std::size_t i = 0; i < init.size(); ++i) init[i] = bd.target(cr.d[i], i);
    try {
      auto res = pdps_solve(model, read.z, fill_markers(init), params.pdps);
      score_candidate(bd, params.solver, res.tau, cr);
      cr.kkt = res.last_step;
      taus[c] = std::move(res.tau);
    } catch (const PdpsError& e) {
      cr.ok = false;
      cr.error = e.what();
      cr.F = std::numeric_limits<double>::infinity();
    }
    cr.ms = ms_since(tc);
    rep.per_candidate.push_back(std::move(cr));
  }
  const std::size_t best = select_candidate(rep.per_candidate, params.solver.score);
  if (best == rep.per_candidate.size())
    throw SolveError(SolveError::Kind::AllSolvesFailed,
                     "read '" + read.id + "': every candidate failed: " + rep.per_candidate.front().error);

  rep.d_star = rep.per_candidate[best].d;
  rep.objective = rep.per_candidate[best].F;
  rep.tau_star_regularized.values = std::move(taus[best]);
  finish_report(model, bd, cs, read, params.solver, false, rep);
  rep.wall_ms = ms_since(t0);
  return rep;
}

}  // namespace dnainv
