#include "dnainv/forward.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dnainv {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Knot positions (0-based, borders included) with all gaps >= spacing.
std::vector<std::size_t> draw_knots(std::mt19937_64& rng, std::size_t n, std::size_t breaks,
                                    std::size_t spacing) {
  const std::size_t need = (breaks + 1) * spacing;
  if (n < 2 || n - 1 < need)
    throw std::invalid_argument("generate_profile: n too small for the requested breaks and spacing");
  const std::size_t slack = (n - 1) - need;
  std::uniform_int_distribution<std::size_t> pick(0, slack);
  std::vector<std::size_t> cuts(breaks);
  for (auto& c : cuts) c = pick(rng);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::size_t> knots{0};
  for (std::size_t k = 0; k < breaks; ++k) knots.push_back((k + 1) * spacing + cuts[k]);
  knots.push_back(n - 1);
  return knots;
}

struct Range {
  double lo, hi;
};

// Fills tau from knot values, one segment at a time, choosing slope signs that
// keep the segment end inside `range` when possible.
bool build_segments(std::mt19937_64& rng, const ProfileSpec& spec, const std::vector<std::size_t>& knots,
                    double start, Range range, std::vector<double>& tau) {
  std::uniform_real_distribution<double> mag(spec.slope_min, spec.slope_max);
  std::bernoulli_distribution coin(0.5);
  tau.assign(spec.n, 0.0);
  double value = start;
  double prev_slope = 0.0;
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const double len = static_cast<double>(knots[s + 1] - knots[s]);
    double slope = 0.0;
    bool found = false;
    for (int attempt = 0; attempt < 32 && !found; ++attempt) {
      const double m = mag(rng);
      const bool up_ok = value + m * len <= range.hi;
      const bool down_ok = value - m * len >= range.lo;
      if (!up_ok && !down_ok) continue;
      slope = (up_ok && down_ok) ? (coin(rng) ? m : -m) : (up_ok ? m : -m);
      found = s == 0 || std::abs(slope - prev_slope) >= 0.5 * spec.slope_min;
    }
    if (!found) return false;
    for (std::size_t i = knots[s]; i <= knots[s + 1]; ++i)
      tau[i] = value + slope * static_cast<double>(i - knots[s]);
    value = tau[knots[s + 1]];
    prev_slope = slope;
  }
  return true;
}

bool build_vshape(std::mt19937_64& rng, const ProfileSpec& spec, const std::vector<std::size_t>& knots,
                  double tau0, std::vector<double>& tau) {
  std::uniform_real_distribution<double> mag(spec.slope_min, spec.slope_max);
  const double margin = 0.5 * spec.slope_min;
  const double lo = std::max(spec.tau_min, 0.0);
  if (tau0 - margin <= lo) return false;
  std::uniform_real_distribution<double> vertex(lo, tau0 - margin);

  tau.assign(spec.n, 0.0);
  const double v = vertex(rng);
  const std::size_t k1 = knots[1];
  const double left = mag(rng);
  for (std::size_t i = 0; i <= k1; ++i) tau[i] = v + left * static_cast<double>(k1 - i);
  if (tau[0] <= tau0 + margin || tau[0] > spec.tau_max) return false;

  double value = v;
  double prev = -left;
  for (std::size_t s = 1; s + 1 < knots.size(); ++s) {
    double slope = mag(rng);
    if (std::abs(slope - prev) < 0.5 * spec.slope_min) return false;
    for (std::size_t i = knots[s]; i <= knots[s + 1]; ++i)
      tau[i] = value + slope * static_cast<double>(i - knots[s]);
    value = tau[knots[s + 1]];
    prev = slope;
  }
  return tau.back() > tau0 + margin && tau.back() <= spec.tau_max;
}

bool gaps_ok(const Breakpoints& bp, std::size_t spacing) {
  for (std::size_t k = 0; k + 1 < bp.indices.size(); ++k)
    if (bp.indices[k + 1] - bp.indices[k] < spacing) return false;
  return true;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return splitmix64(seed ^ splitmix64(stream)); }

std::vector<double> forward(const PulseModel& model, std::span<const double> tau) {
  std::vector<double> z(tau.size());
  std::transform(tau.begin(), tau.end(), z.begin(), [&](double t) { return model.eval(t); });
  return z;
}

std::vector<double> forward_jacobian_diagonal(const PulseModel& model, std::span<const double> tau) {
  std::vector<double> j(tau.size());
  std::transform(tau.begin(), tau.end(), j.begin(), [&](double t) { return model.derivative(t); });
  return j;
}

std::vector<int> true_branches(const PulseModel& model, std::span<const double> tau) {
  std::vector<int> d(tau.size());
  std::transform(tau.begin(), tau.end(), d.begin(), [&](double t) { return t > model.tau0() ? 1 : 0; });
  return d;
}

std::size_t count_crossings(std::span<const double> tau, double level) {
  std::size_t c = 0;
  for (std::size_t i = 0; i + 1 < tau.size(); ++i)
    if ((tau[i] - level) * (tau[i + 1] - level) < 0.0) ++c;
  return c;
}

namespace {

bool crossings_spaced(std::span<const double> tau, double level, std::size_t gap) {
  std::size_t last = 0;
  bool seen = false;
  for (std::size_t i = 0; i + 1 < tau.size(); ++i) {
    if ((tau[i] - level) * (tau[i + 1] - level) >= 0.0) continue;
    if (seen && i - last < gap) return false;
    last = i;
    seen = true;
  }
  return true;
}

}  // namespace

TimingProfile generate_profile(std::uint64_t seed, const ProfileSpec& spec, const PulseModel& model,
                               double dx) {
  if (!(spec.slope_min > 0.0) || spec.slope_max < spec.slope_min)
    throw std::invalid_argument("generate_profile: slope range must exclude 0");
  if (spec.spacing < 1) throw std::invalid_argument("generate_profile: spacing must be >= 1");
  if (spec.policy == CrossingPolicy::VShape && spec.breaks < 1)
    throw std::invalid_argument("generate_profile: v-shape needs at least one break");

  std::mt19937_64 rng(splitmix64(seed));
  const double tau0 = model.tau0();
  TimingProfile out;
  out.dx = dx;

  for (int attempt = 0; attempt < 20000; ++attempt) {
    auto knots = draw_knots(rng, spec.n, spec.breaks, spec.spacing);
    bool ok = false;
    Range range{spec.tau_min, spec.tau_max};
    switch (spec.policy) {
      case CrossingPolicy::Free:
        break;
      case CrossingPolicy::BelowPeak:
        range.hi = std::min(spec.tau_max, tau0 - 0.5 * spec.slope_min);
        break;
      case CrossingPolicy::ZeroRuns:
        range.lo = -0.5 * spec.tau_max;
        break;
      case CrossingPolicy::VShape:
        ok = build_vshape(rng, spec, knots, tau0, out.values);
        break;
    }
    if (spec.policy != CrossingPolicy::VShape) {
      if (range.hi <= range.lo) throw std::invalid_argument("generate_profile: empty value range");
      std::uniform_real_distribution<double> start(range.lo, range.hi);
      ok = build_segments(rng, spec, knots, start(rng), range, out.values);
    }
    if (!ok) continue;

    const auto& tau = out.values;
    // Keep samples off the junction so the true branch is unambiguous.
    if (std::any_of(tau.begin(), tau.end(), [&](double t) { return std::abs(t - tau0) < 1e-6; }))
      continue;
    const double tol = default_break_tol(tau);
    auto bp = breakpoints(tau, tol);
    if (bp.count() != spec.breaks) continue;
    if (spec.policy == CrossingPolicy::ZeroRuns) {
      if (*std::min_element(tau.begin(), tau.end()) >= 0.0 || !gaps_ok(bp, spec.spacing)) continue;
      return out;
    }
    if (spec.policy == CrossingPolicy::VShape && count_crossings(tau, tau0) != 2) continue;
    if (!crossings_spaced(tau, tau0, spec.min_crossing_gap)) continue;
    if (membership(tau, spec.breaks, tol, spec.spacing).in_pc_geq) return out;
  }
  throw std::invalid_argument("generate_profile: could not satisfy the spec; widen slope or value ranges");
}

std::vector<double> add_noise(std::span<const double> clean, std::uint64_t seed, double sigma,
                              NoiseKind kind, double psi_max) {
  std::vector<double> z(clean.begin(), clean.end());
  if (sigma <= 0.0) return z;
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedull));
  if (kind == NoiseKind::Gaussian) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& v : z) {
      const double s = v == 0.0 ? 0.1 * sigma : sigma;
      v = std::max(0.0, v + s * g(rng));
    }
    return z;
  }
  const auto trials = std::max<long long>(1, std::llround(psi_max * psi_max / (sigma * sigma)));
  for (auto& v : z) {
    const double p = std::clamp(v / psi_max, 0.0, 1.0);
    std::binomial_distribution<long long> b(trials, p);
    v = static_cast<double>(b(rng)) / static_cast<double>(trials) * psi_max;
  }
  return z;
}

Read simulate_read(const PulseModel& model, const SimulationSpec& spec, std::uint64_t seed, std::string id) {
  Read r;
  r.id = std::move(id);
  r.dx = spec.dx;
  auto tau = generate_profile(splitmix64(seed), spec.profile, model, spec.dx);
  auto clean = forward(model, tau.values);
  r.z = add_noise(clean, splitmix64(seed + 1), spec.sigma, spec.noise, model.psi_max());
  r.d_true = true_branches(model, tau.values);
  r.tau_true = std::move(tau.values);
  return r;
}

}  // namespace dnainv
