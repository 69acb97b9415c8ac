#include "dnainv/pulse_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dnainv {

PulseModel::PulseModel(const Params& p) : p_(p) {
  if (!(p.tau0 > 0.0) || !(p.rise_rate > 0.0) || !(p.decay_rate > 0.0))
    throw std::invalid_argument("pulse model: tau0 and rates must be positive");
  if (!(p.residual > 0.0) || !(p.residual < p.psi_max))
    throw std::invalid_argument("pulse model: need 0 < residual < psi_max");
  rise_norm_ = -std::expm1(-p.rise_rate * p.tau0);
}

double PulseModel::eval(double t) const noexcept {
  if (t <= 0.0) return 0.0;
  if (t <= p_.tau0) {
    return p_.psi_max * (-std::expm1(-p_.rise_rate * t)) / rise_norm_;
  }
  return p_.residual + (p_.psi_max - p_.residual) * std::exp(-p_.decay_rate * (t - p_.tau0));
}

double PulseModel::derivative(double t) const noexcept {
  if (t < 0.0 || t == p_.tau0) return 0.0;
  if (t < p_.tau0) {
    return p_.psi_max * p_.rise_rate * std::exp(-p_.rise_rate * t) / rise_norm_;
  }
  return -p_.decay_rate * (p_.psi_max - p_.residual) * std::exp(-p_.decay_rate * (t - p_.tau0));
}

double PulseModel::second_derivative(double t) const noexcept {
  if (t < 0.0 || t == p_.tau0) return 0.0;
  if (t < p_.tau0) {
    return -p_.psi_max * p_.rise_rate * p_.rise_rate * std::exp(-p_.rise_rate * t) / rise_norm_;
  }
  return p_.decay_rate * p_.decay_rate * (p_.psi_max - p_.residual) *
         std::exp(-p_.decay_rate * (t - p_.tau0));
}

std::optional<double> PulseModel::inverse(Branch branch, double b) const noexcept {
  if (!(b >= 0.0) || b > p_.psi_max) return std::nullopt;
  if (branch == Branch::Rise) {
    if (b == p_.psi_max) return p_.tau0;
    // 1 - exp(-r t) = b * norm / psi_max
    double t = -std::log1p(-b * rise_norm_ / p_.psi_max) / p_.rise_rate;
    return std::clamp(t, 0.0, p_.tau0);
  }
  if (b <= p_.residual) return std::nullopt;
  if (b == p_.psi_max) return p_.tau0;
  double t = p_.tau0 - std::log((b - p_.residual) / (p_.psi_max - p_.residual)) / p_.decay_rate;
  return std::max(t, p_.tau0);
}

double PulseModel::lipschitz() const noexcept {
  return std::max(p_.psi_max * p_.rise_rate / rise_norm_,
                  p_.decay_rate * (p_.psi_max - p_.residual));
}

double PulseModel::lipschitz_derivative() const noexcept {
  return std::max(p_.psi_max * p_.rise_rate * p_.rise_rate / rise_norm_,
                  p_.decay_rate * p_.decay_rate * (p_.psi_max - p_.residual));
}

}  // namespace dnainv
