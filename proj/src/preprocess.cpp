#include "dnainv/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dnainv {

std::vector<double> smooth(std::span<const double> z, std::size_t window) {
  if (window < 3 || window % 2 == 0) throw std::invalid_argument("smooth: window must be odd and >= 3");
  const std::size_t n = z.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = std::min({half, i, n - 1 - i});
    double s = 0.0;
    for (std::size_t j = i - r; j <= i + r; ++j) s += z[j];
    out[i] = s / static_cast<double>(2 * r + 1);
  }
  return out;
}

BranchData branch_data(const PulseModel& model, std::span<const double> z, const BranchOptions& opt) {
  std::vector<double> zs;
  if (opt.smoothing) zs = smooth(z, opt.window);
  std::span<const double> src = opt.smoothing ? std::span<const double>(zs) : z;

  const std::size_t n = src.size();
  BranchData bd;
  bd.z0.assign(n, kNoPreimage);
  bd.z1.assign(n, kNoPreimage);
  bd.w0.assign(n, 0.0);
  bd.w1.assign(n, 0.0);
  bd.h.assign(n, kNoPreimage);

  double wmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (auto t = model.inverse(Branch::Rise, src[i])) {
      bd.z0[i] = *t;
      bd.w0[i] = model.derivative(*t);
    }
    if (auto t = model.inverse(Branch::Decay, src[i])) {
      bd.z1[i] = *t;
      bd.w1[i] = model.derivative(*t);
    }
    wmax = std::max({wmax, std::abs(bd.w0[i]), std::abs(bd.w1[i])});
  }
  const double floor = opt.weight_floor * wmax;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(bd.z0[i])) bd.w0[i] = std::max(bd.w0[i], floor);
    if (std::isfinite(bd.z1[i])) bd.w1[i] = std::min(bd.w1[i], -floor);
    if (std::isfinite(bd.z0[i]) && std::isfinite(bd.z1[i])) bd.h[i] = bd.z1[i] - bd.z0[i];
  }
  return bd;
}

std::vector<std::size_t> zero_set(std::span<const double> z, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < z.size(); ++i)
    if (z[i] <= tol && z[i + 1] <= tol) out.push_back(i);
  return out;
}

std::size_t CandidateSet::bound() const {
  std::size_t b = 2;
  for (std::size_t k = 0; k < windows.size(); ++k) b *= m_A + 1;
  return b;
}

namespace {

double median_of(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    auto lo = std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + *lo);
  }
  return m;
}

}  // namespace

std::vector<std::size_t> local_minima(std::span<const double> h, std::size_t s_A) {
  std::vector<double> finite;
  for (double v : h)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.size() < 3) return {};
  const double med = median_of(finite);
  for (auto& v : finite) v = std::abs(v - med);
  const double threshold = med - 0.5 * median_of(finite);

  const std::size_t n = h.size();
  const std::size_t radius = std::max<std::size_t>(1, s_A / 2);
  // Border entry b may stand in for a crossing only when one more step, as
  // large as the last or the one before it, takes h to zero.
  const auto border_ok = [&](std::size_t b) {
    if (n < 3 || !std::isfinite(h[b])) return false;
    const std::size_t nb = b == 0 ? 1 : n - 2, nb2 = b == 0 ? 2 : n - 3;
    if (!std::isfinite(h[nb])) return false;
    double step = h[nb] - h[b];
    if (std::isfinite(h[nb2])) step = std::max(step, h[nb2] - h[nb]);
    return h[b] <= step;
  };
  const bool first_ok = border_ok(0), last_ok = border_ok(n - 1);

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(h[i]) || h[i] > threshold) continue;
    const std::size_t lo = i > radius ? i - radius : 0;
    const std::size_t hi = std::min(n - 1, i + radius);
    bool left = false, right = false, is_min = true;
    for (std::size_t j = lo; j <= hi && is_min; ++j) {
      if (j == i || !std::isfinite(h[j])) continue;
      (j < i ? left : right) = true;
      // A border entry that cannot be a center does not hide one further in,
      // unless it is the direct neighbour.
      if (((j == 0 && !first_ok) || (j + 1 == n && !last_ok)) && j + 1 != i && j != i + 1) continue;
      is_min = j < i ? h[j] > h[i] : h[j] >= h[i];
    }
    if (!is_min) continue;
    if (left && right) {
      out.push_back(i);
      continue;
    }
    if ((i == 0 && right && first_ok) || (i + 1 == n && left && last_ok)) out.push_back(i);
  }
  return out;
}

std::vector<Window> oscillation_windows(std::span<const double> h, std::size_t s_A) {
  const std::size_t n = h.size();
  const std::size_t half = s_A / 2;
  std::vector<Window> out;
  for (auto c : local_minima(h, s_A)) {
    Window w{c > half ? c - half : 0, std::min(n - 1, c + half), c};
    if (!out.empty()) {
      auto& last = out.back();
      if (w.begin <= last.end && last.end - w.begin + 1 > half) {
        last.end = w.end;
        last.center = (last.begin + last.end) / 2;
        continue;
      }
    }
    out.push_back(w);
  }
  return out;
}

std::vector<std::size_t> transition_offsets(const Window& w, std::size_t s_A, std::size_t m_A) {
  std::set<std::size_t> pos;
  const double width = std::max(static_cast<double>(s_A), static_cast<double>(w.end - w.begin));
  const double step = width / static_cast<double>(m_A);
  const std::size_t lo = w.begin + 1, hi = std::max(w.begin + 1, w.end);
  for (std::size_t j = 0; j < m_A; ++j) {
    const double off = (static_cast<double>(j) - 0.5 * static_cast<double>(m_A - 1)) * step;
    const double p = static_cast<double>(w.center) + std::round(off);
    const auto clipped = static_cast<std::size_t>(
        std::clamp(p, static_cast<double>(lo), static_cast<double>(hi)));
    pos.insert(clipped);
  }
  return {pos.begin(), pos.end()};
}

CandidateSet candidate_set(const BranchData& bd, std::span<const std::size_t> zero, std::size_t s_A,
                           std::size_t m_A) {
  if (s_A < 1 || m_A < 1) throw std::invalid_argument("candidate_set: s_A and m_A must be >= 1");
  const std::size_t n = bd.size();
  CandidateSet cs;
  cs.s_A = s_A;
  cs.m_A = m_A;
  cs.zero.assign(zero.begin(), zero.end());
  if (n < 2) {
    cs.candidates.push_back(std::vector<int>(n, 0));
    return cs;
  }
  cs.windows = oscillation_windows(bd.h, s_A);
  // A stub shorter than one offset step next to the border joins the window.
  const std::size_t snap = s_A / (2 * m_A);
  for (auto& w : cs.windows) {
    if (w.begin <= snap) w.begin = 0;
    if (n - 1 - w.end <= snap) w.end = n - 1;
  }

  std::vector<std::vector<std::size_t>> choices;  // 0 = no flip, else position
  for (const auto& w : cs.windows) {
    auto offs = transition_offsets(w, s_A, m_A);
    offs.insert(offs.begin(), 0);
    choices.push_back(std::move(offs));
  }

  std::set<std::vector<int>> unique;
  std::vector<std::size_t> idx(choices.size(), 0);
  std::vector<int> flips(n);
  while (true) {
    std::fill(flips.begin(), flips.end(), 0);
    for (std::size_t k = 0; k < choices.size(); ++k)
      if (auto p = choices[k][idx[k]]; p != 0) flips[p] ^= 1;
    for (int polarity = 0; polarity <= 1; ++polarity) {
      std::vector<int> d(n);
      int cur = polarity;
      for (std::size_t i = 0; i < n; ++i) {
        cur ^= flips[i];
        d[i] = cur;
      }
      if (std::all_of(zero.begin(), zero.end(), [&](std::size_t i) { return i < n && d[i] == 0; }))
        unique.insert(std::move(d));
    }
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == choices[k].size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  cs.candidates.assign(unique.begin(), unique.end());
  return cs;
}

bool respects_constraints(std::span<const int> d, const CandidateSet& cs) {
  const std::size_t n = d.size();
  for (auto i : cs.zero)
    if (i >= n || d[i] != 0) return false;
  // A flip between i and i+1 must happen with both ends inside one window.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (d[i] == d[i + 1]) continue;
    bool covered = false;
    for (const auto& w : cs.windows)
      if (w.begin <= i && i + 1 <= w.end) covered = true;
    if (!covered) return false;
  }
  return true;
}

}  // namespace dnainv
