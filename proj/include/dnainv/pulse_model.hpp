#pragma once

#include <optional>

namespace dnainv {

/// Which injective piece of the pulse curve a coordinate is explained by.
enum class Branch : int { Rise = 0, Decay = 1 };

/// Intracellular label concentration as a function of time.
///
/// The curve is zero for t <= 0, rises on [0, tau0] along a strictly concave
/// saturating exponential, then decays on [tau0, inf) along a convex
/// exponential toward `residual`:
///
///   rise(t)  = psi_max * (1 - exp(-rise_rate t)) / (1 - exp(-rise_rate tau0))
///   decay(t) = residual + (psi_max - residual) * exp(-decay_rate (t - tau0))
///
/// Both pieces have closed-form inverses. Instances are immutable.
class PulseModel {
 public:
  struct Params {
    double tau0 = 2.0;
    double psi_max = 1.0;
    double residual = 0.1;
    double rise_rate = 1.5;
    double decay_rate = 0.3;
  };

  PulseModel() : PulseModel(Params{}) {}
  /// Throws std::invalid_argument unless 0 < residual < psi_max, tau0 > 0 and
  /// both rates are positive.
  explicit PulseModel(const Params& p);

  const Params& params() const noexcept { return p_; }
  double tau0() const noexcept { return p_.tau0; }
  double psi_max() const noexcept { return p_.psi_max; }
  double residual() const noexcept { return p_.residual; }

  double eval(double t) const noexcept;

  /// Analytic derivative of the active piece. Returns 0 for t < 0 and, by
  /// convention, at the peak t == tau0 where the one-sided slopes differ.
  double derivative(double t) const noexcept;

  /// Second derivative of the active piece (0 outside (0, inf) and at tau0).
  double second_derivative(double t) const noexcept;

  /// Unique preimage of b on the requested branch, or nullopt when the branch
  /// never attains b. Rise covers [0, psi_max]; Decay covers (residual, psi_max].
  std::optional<double> inverse(Branch branch, double b) const noexcept;

  /// sup |psi'| and sup |psi''| over [0, inf), used for step-size rules.
  double lipschitz() const noexcept;
  double lipschitz_derivative() const noexcept;

 private:
  Params p_;
  double rise_norm_;  // 1 - exp(-rise_rate * tau0)
};

}  // namespace dnainv
