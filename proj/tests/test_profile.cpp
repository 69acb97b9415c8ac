#include "dnainv/profile.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

using namespace dnainv;

namespace {

// Continuous piecewise-linear profile with slope changes at `knots` (0-based).
std::vector<double> piecewise(std::size_t n, double start, const std::vector<std::size_t>& knots,
                              const std::vector<double>& slopes) {
  std::vector<double> tau(n);
  tau[0] = start;
  std::size_t seg = 0;
  for (std::size_t i = 1; i < n; ++i) {
    while (seg < knots.size() && i > knots[seg]) ++seg;
    tau[i] = tau[i - 1] + slopes[seg];
  }
  return tau;
}

}  // namespace

TEST_CASE("second difference examples") {
  CHECK(second_difference(std::vector<double>{1, 2, 3, 4, 5}) == std::vector<double>{0, 0, 0});
  CHECK(second_difference(std::vector<double>{0, 0, 1, 2}) == std::vector<double>{1, 0});
  CHECK(second_difference(std::vector<double>(7, 3.25)) == std::vector<double>(5, 0.0));
  CHECK_THROWS_AS(second_difference(std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("breakpoints of lines and single slope changes") {
  std::vector<double> line(30);
  for (std::size_t i = 0; i < line.size(); ++i) line[i] = 0.5 + 0.125 * static_cast<double>(i);  // exact in binary
  for (double tol : {0.0, 1e-9, 1.0}) {
    const auto bp = breakpoints(line, tol);
    CHECK(bp.indices == std::vector<std::size_t>{0, 29});
    CHECK(bp.count() == 0);
  }
  const std::size_t k = 11;
  const auto tau = piecewise(30, 0.0, {k}, {1.0, 2.0});
  CHECK(second_difference(tau)[k - 1] == 1.0);
  const auto bp = breakpoints(tau, 0.0);
  CHECK(bp.indices == std::vector<std::size_t>{0, k, 29});
  CHECK(bp.count() == 1);
  CHECK(bp.interior() == std::vector<std::size_t>{k});
}

TEST_CASE("breakpoints ignore perturbations below the tolerance") {
  const auto tau = piecewise(60, 1.0, {15, 40}, {0.05, -0.03, 0.02});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e-12, 1e-12);
  auto noisy = tau;
  for (auto& v : noisy) v += u(rng);
  CHECK(breakpoints(noisy, 1e-9).indices == breakpoints(tau, 1e-9).indices);
}

TEST_CASE("recovery of constructed knot sets") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 200)(rng);
    const std::size_t p = std::uniform_int_distribution<std::size_t>(0, 5)(rng);
    std::set<std::size_t> ks;
    while (ks.size() < p) ks.insert(std::uniform_int_distribution<std::size_t>(1, n - 2)(rng));
    std::vector<std::size_t> knots(ks.begin(), ks.end());
    std::vector<double> slopes{std::uniform_real_distribution<double>(-0.1, 0.1)(rng)};
    for (std::size_t j = 0; j < p; ++j) {
      const double jump = std::uniform_real_distribution<double>(0.01, 0.1)(rng);
      slopes.push_back(slopes.back() + (rng() % 2 ? jump : -jump));
    }
    const auto tau = piecewise(n, std::uniform_real_distribution<double>(0, 5)(rng), knots, slopes);
    double mx = 0;
    for (double v : tau) mx = std::max(mx, std::abs(v));
    const auto bp = breakpoints(tau, 1e-9 * mx);
    REQUIRE(bp.interior() == knots);

    std::size_t nz = 0;
    for (double v : second_difference(tau)) nz += std::abs(v) > 1e-9 * mx;
    CHECK(nz == bp.count());
  }
}

TEST_CASE("breakpoints do not depend on the grid spacing") {
  const auto values = piecewise(80, 2.0, {20, 50}, {0.04, -0.02, 0.03});
  TimingProfile a{values, 0.1}, b{values, 0.37};
  CHECK(breakpoints(a.values, default_break_tol(a.values)).indices ==
        breakpoints(b.values, default_break_tol(b.values)).indices);
}

TEST_CASE("membership examples") {
  std::vector<double> line(20);
  for (std::size_t i = 0; i < 20; ++i) line[i] = 0.1 * static_cast<double>(i + 1);
  auto m = membership(line, 0, 1e-9);
  CHECK(m.in_pc);
  CHECK(m.in_pc_neq);
  CHECK(m.in_pc_geq);

  m = membership(std::vector<double>(20, 1.5), 0, 1e-9);
  CHECK(m.in_pc);
  CHECK_FALSE(m.in_pc_neq);

  const auto close = piecewise(40, 1.0, {4, 9}, {0.1, -0.05, 0.1});
  m = membership(close, 2, 1e-9);
  CHECK(m.in_pc);
  CHECK(m.in_pc_neq);
  CHECK_FALSE(m.in_pc_geq);

  auto negative = line;
  negative[0] = -0.1;
  CHECK_FALSE(membership(negative, 0, 1e-9).in_pc_neq);
}

TEST_CASE("membership is monotone in C") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = rng() % 4;
    std::vector<std::size_t> knots;
    for (std::size_t j = 0; j < p; ++j) knots.push_back(15 + 15 * j);
    std::vector<double> slopes{0.05};
    for (std::size_t j = 0; j < p; ++j) slopes.push_back(j % 2 ? 0.05 : -0.03);
    const auto tau = piecewise(80, 3.0, knots, slopes);
    for (std::size_t C = 0; C < 6; ++C)
      if (membership(tau, C, 1e-9).in_pc) CHECK(membership(tau, C + 1, 1e-9).in_pc);
  }
}

TEST_CASE("refit interpolates exact piecewise-linear targets") {
  const auto target = piecewise(50, 1.0, {14, 31}, {0.05, -0.04, 0.06});
  const auto bp = breakpoints(target, 1e-9);
  const auto fit = refit_piecewise_linear(bp, std::vector<double>(50, 1.0), target);
  for (std::size_t i = 0; i < 50; ++i) CHECK(std::abs(fit[i] - target[i]) <= 1e-9);
}

TEST_CASE("refit without knots is the least-squares line") {
  const std::size_t n = 21;
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) target[i] = 0.3 + 0.07 * static_cast<double>(i);
  // Symmetric +-eps at mirrored points leaves the regression line unchanged.
  const double eps = 0.01;
  for (std::size_t i = 0; i < 5; ++i) {
    target[i] += (i % 2 ? eps : -eps);
    target[n - 1 - i] += (i % 2 ? eps : -eps);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    sx += x;
    sy += target[i];
    sxx += x * x;
    sxy += x * target[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx), icept = (sy - slope * sx) / n;
  Breakpoints bp{{0, n - 1}};
  const auto fit = refit_piecewise_linear(bp, std::vector<double>(n, 1.0), target);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(fit[i] - (icept + slope * static_cast<double>(i))) <= 1e-12);
}

TEST_CASE("refit ignores targets at zero weight and rejects unsupported segments") {
  const auto target = piecewise(40, 2.0, {20}, {0.05, -0.05});
  std::vector<double> w(40, 1.0);
  w[3] = w[25] = 0.0;
  auto altered = target;
  altered[3] = std::numeric_limits<double>::infinity();
  altered[25] = 123.0;
  const Breakpoints bp{{0, 20, 39}};
  CHECK(refit_piecewise_linear(bp, w, target) == refit_piecewise_linear(bp, w, altered));

  std::vector<double> sparse(40, 0.0);
  sparse[0] = sparse[39] = sparse[30] = 1.0;
  CHECK_THROWS_AS(refit_piecewise_linear(bp, sparse, target), std::invalid_argument);
}
