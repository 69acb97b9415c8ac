#include "dnainv/forward.hpp"
#include "dnainv/preprocess.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace dnainv;

namespace {

// Explicit constraint matrices: A d = 0 ties neighbours outside windows,
// B d = 0 pins the zero set.
bool satisfies_matrix_constraints(const std::vector<int>& d, const CandidateSet& cs) {
  const auto n = static_cast<Eigen::Index>(d.size());
  std::vector<std::pair<Eigen::Index, Eigen::Index>> rows;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const bool inside = std::any_of(cs.windows.begin(), cs.windows.end(), [&](const Window& w) {
      return static_cast<Eigen::Index>(w.begin) <= i && i + 1 <= static_cast<Eigen::Index>(w.end);
    });
    if (!inside) rows.emplace_back(i, i + 1);
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    A(static_cast<Eigen::Index>(r), rows[r].first) = 1.0;
    A(static_cast<Eigen::Index>(r), rows[r].second) = -1.0;
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cs.zero.size()), n);
  for (std::size_t r = 0; r < cs.zero.size(); ++r) B(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cs.zero[r])) = 1.0;
  Eigen::VectorXd dv(n);
  for (Eigen::Index i = 0; i < n; ++i) dv(i) = d[static_cast<std::size_t>(i)];
  return (A * dv).cwiseAbs().maxCoeff() == 0.0 && (B.rows() == 0 || (B * dv).cwiseAbs().maxCoeff() == 0.0);
}

bool inside_any(std::size_t i, const std::vector<Window>& ws) {
  return std::any_of(ws.begin(), ws.end(), [&](const Window& w) { return w.begin <= i && i <= w.end; });
}

}  // namespace

TEST_CASE("smooth examples") {
  CHECK(smooth(std::vector<double>(9, 2.5)) == std::vector<double>(9, 2.5));
  std::vector<double> impulse(11, 0.0);
  impulse[5] = 1.0;
  const auto s = smooth(impulse);
  for (std::size_t i = 0; i < 11; ++i) CHECK(s[i] == doctest::Approx(i >= 3 && i <= 7 ? 0.2 : 0.0));
  std::vector<double> ramp(12);
  for (std::size_t i = 0; i < 12; ++i) ramp[i] = 0.5 * static_cast<double>(i);
  const auto r = smooth(ramp);
  for (std::size_t i = 0; i < 12; ++i) CHECK(r[i] == doctest::Approx(ramp[i]).epsilon(1e-14));
  CHECK_THROWS_AS(smooth(ramp, 4), std::invalid_argument);
  CHECK_THROWS_AS(smooth(ramp, 1), std::invalid_argument);
}

TEST_CASE("branch data at special values") {
  const PulseModel m;
  const auto bd = branch_data(m, std::vector<double>{0.0, m.psi_max(), m.psi_max() + 0.1});
  CHECK(bd.z0[0] == 0.0);
  CHECK(bd.w0[0] == doctest::Approx(m.derivative(0.0)));
  CHECK(std::isinf(bd.z1[0]));
  CHECK(bd.w1[0] == 0.0);
  CHECK(bd.z0[1] == doctest::Approx(m.tau0()));
  CHECK(bd.z1[1] == doctest::Approx(m.tau0()));
  CHECK(bd.h[1] == doctest::Approx(0.0));
  CHECK(std::isinf(bd.z0[2]));
  CHECK(std::isinf(bd.z1[2]));
  CHECK(bd.w0[2] == 0.0);
  CHECK(bd.w1[2] == 0.0);
}

TEST_CASE("branch data invariants on noisy reads") {
  const PulseModel m;
  SimulationSpec spec;
  spec.sigma = 0.05;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = simulate_read(m, spec, seed, "r");
    for (bool smoothing : {false, true}) {
      BranchOptions opt;
      opt.smoothing = smoothing;
      const auto bd = branch_data(m, r.z, opt);
      double wmax = 0;
      for (std::size_t i = 0; i < bd.size(); ++i) wmax = std::max({wmax, bd.w0[i], -bd.w1[i]});
      for (std::size_t i = 0; i < bd.size(); ++i) {
        CHECK((bd.w0[i] == 0.0) == std::isinf(bd.z0[i]));
        CHECK((bd.w1[i] == 0.0) == std::isinf(bd.z1[i]));
        CHECK(bd.w0[i] >= 0.0);
        CHECK(bd.w1[i] <= 0.0);
        if (bd.w0[i] != 0.0) CHECK(bd.w0[i] >= 1e-4 * wmax * (1 - 1e-12));
        if (!std::isinf(bd.z0[i]) && !std::isinf(bd.z1[i])) {
          CHECK(bd.z1[i] >= bd.z0[i]);
          CHECK(bd.h[i] >= 0.0);
          CHECK(bd.h[i] == doctest::Approx(bd.z1[i] - bd.z0[i]));
        }
      }
    }
  }
}

TEST_CASE("zero set examples") {
  CHECK(zero_set(std::vector<double>{0.1, 0.2, 0.3}).empty());
  CHECK(zero_set(std::vector<double>{0.0, 0.0, 0.5, 0.4}) == std::vector<std::size_t>{0});
  CHECK(zero_set(std::vector<double>{0.3, 0.0, 0.5, 0.4}).empty());
  CHECK(zero_set(std::vector<double>{0.3, 1e-7, 1e-7, 0.4}, 1e-6) == std::vector<std::size_t>{1});
}

TEST_CASE("single crossing gives one window at the crossing") {
  const PulseModel m;
  const std::size_t n = 200;
  std::vector<double> tau(n);
  for (std::size_t i = 0; i < n; ++i) tau[i] = 0.5 + 0.02 * static_cast<double>(i);  // crosses tau0 at 75
  const auto z = forward(m, tau);
  const auto cs = candidate_set(branch_data(m, z), zero_set(z));
  REQUIRE(cs.windows.size() == 1);
  CHECK(std::abs(static_cast<double>(cs.windows[0].center) - 75.0) <= 2.0);
  CHECK(cs.candidates.size() <= cs.bound());
  const auto d = true_branches(m, tau);
  bool found = false;
  for (const auto& c : cs.candidates) {
    bool match = true;
    for (std::size_t i = 0; i < n; ++i)
      if (!inside_any(i, cs.windows) && c[i] != d[i]) match = false;
    found |= match;
  }
  CHECK(found);
}

TEST_CASE("zero runs force d = 0") {
  const PulseModel m;
  const std::size_t n = 240;
  std::vector<double> tau(n);
  // Negative on both flanks, a hump above tau0 in the middle.
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    tau[i] = i < 120 ? -1.0 + 0.06 * x : -1.0 + 0.06 * (239.0 - x);
  }
  const auto z = forward(m, tau);
  const auto zero = zero_set(z);
  REQUIRE(!zero.empty());
  const auto cs = candidate_set(branch_data(m, z), zero);
  REQUIRE(!cs.candidates.empty());
  for (const auto& c : cs.candidates)
    for (auto i : zero) CHECK(c[i] == 0);
}

TEST_CASE("candidate count and constraint structure") {
  const PulseModel m;
  SimulationSpec spec;
  spec.profile.n = 300;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    spec.profile.breaks = 1 + seed % 4;
    spec.sigma = seed % 2 ? 0.05 : 0.0;
    const auto r = simulate_read(m, spec, 100 + seed, "r");
    const auto cs = candidate_set(branch_data(m, r.z), zero_set(r.z), 60, 3);
    CHECK(cs.candidates.size() <= cs.bound());
    if (cs.windows.size() == 2) CHECK(cs.candidates.size() <= 32);
    CHECK(std::is_sorted(cs.candidates.begin(), cs.candidates.end()));
    CHECK(std::adjacent_find(cs.candidates.begin(), cs.candidates.end()) == cs.candidates.end());
    for (const auto& c : cs.candidates) {
      CHECK(respects_constraints(c, cs));
      CHECK(satisfies_matrix_constraints(c, cs));
    }
  }
}

TEST_CASE("noiseless containment of the true assignment") {
  const PulseModel m;
  SimulationSpec spec;
  spec.sigma = 0.0;
  int instances = 0;
  for (std::uint64_t seed = 0; instances < 100; ++seed) {
    spec.profile.n = seed % 2 ? 100 : 300;
    spec.profile.breaks = 1 + seed % 4;
    if (spec.profile.n == 100 && spec.profile.breaks > 3) spec.profile.breaks = 3;
    const auto r = simulate_read(m, spec, 7000 + seed, "r");
    if (count_crossings(*r.tau_true, m.tau0()) == 0) continue;
    ++instances;
    const auto cs = candidate_set(branch_data(m, r.z), zero_set(r.z));
    bool found = false;
    for (const auto& c : cs.candidates) {
      bool outside = true;
      for (std::size_t i = 0; i < c.size(); ++i)
        if (!inside_any(i, cs.windows) && c[i] != (*r.d_true)[i]) outside = false;
      if (!outside) continue;
      // Each true crossing inside a window lies within s_A / (2 m_A) of a flip of c.
      bool near = true;
      for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        if ((*r.d_true)[i] == (*r.d_true)[i + 1]) continue;
        bool ok = false;
        for (std::size_t j = 0; j + 1 < c.size(); ++j)
          if (c[j] != c[j + 1] && std::abs(static_cast<double>(j) - static_cast<double>(i)) <= 10.0) ok = true;
        near &= ok;
      }
      found |= near;
    }
    CHECK_MESSAGE(found, "seed " << 7000 + seed);
  }
}

TEST_CASE("border minima") {
  // Falling into the last sample faster than a square root: one more step reaches zero.
  std::vector<double> h;
  for (int i = 0; i < 40; ++i) h.push_back(2.0 - 0.05 * i);
  h.push_back(0.06);
  h.push_back(0.03);
  CHECK(local_minima(h, 20) == std::vector<std::size_t>{h.size() - 1});

  // A slow approach to the border is not a center and does not hide the dip at 10.
  std::vector<double> g;
  for (int i = 0; i <= 20; ++i) g.push_back(0.08 + 0.05 * std::abs(i - 10));
  for (int i = 1; i <= 10; ++i) g.push_back(g.back() - 0.05);
  g.back() = 0.075;
  CHECK(local_minima(g, 60) == std::vector<std::size_t>{10});

  // Still falling at the border: the neighbour of a failed border is not a minimum.
  std::vector<double> f;
  for (int i = 0; i < 30; ++i) f.push_back(1.0 - 0.01 * i);
  CHECK(local_minima(f, 20).empty());
}
