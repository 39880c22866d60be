#pragma once

#include <cmath>

#include "fracobs/quadrature.hpp"
#include "fracobs/weights.hpp"

namespace fracobs {

/// w(x, y) = (sqrt(x^2 + y^2) - x)^s, the tangential derivative of the
/// half-space profile; vanishes on {y = 0, x >= 0}.
template <typename Scalar>
Scalar profile_derivative(Scalar x, Scalar y, Scalar s) {
  const Scalar rho = std::hypot(x, y);
  // rho - x loses all digits when x >> |y|; use y^2 / (rho + x) there.
  const Scalar base = x > Scalar(0) ? (y * y) / (rho + x) : rho - x;
  if (base <= Scalar(0)) return Scalar(0);
  return std::pow(base, s);
}

/// The unique (up to scaling and reflection) global thin-obstacle profile of
/// degree 1 + s with contact set {y = 0, x >= 0}: even in y, -d/dx u0 = w, and
/// u0(x, 0) = 2^s |x|^{1+s}/(1+s) on x < 0.
///
/// Off the thin space u0(x, y) = y^{1+s} h(x/y). For x/y <= -1, h is matched to
/// the thin-space asymptotics at -infinity:
///   h(xi) = q(xi) - int_{-inf}^{xi} (q'(t) + w(t, 1)) dt,
///   q(t) = 2^s (t^2 + 1)^{(1+s)/2} / (1+s),
/// and for x/y > -1 the profile is continued by integrating w in x.
/// The raw profile is rescaled so that int_{S_1} u0^2 |y|^a dsigma = 1.
template <typename Scalar>
class GlobalProfile {
 public:
  explicit GlobalProfile(const WeightParams<Scalar>& params, Scalar tolerance = Scalar(1e-13))
      : params_(params), s_(params.s), tol_(tolerance) {
    two_s_ = std::pow(Scalar(2), s_);
    h_at_minus_one_ = q(Scalar(-1)) - tail(Scalar(-1));
    const auto rule = SphereRule<Scalar>::make(params_, 4096);
    const Scalar norm2 = rule.integrate([this](Scalar x, Scalar y) {
      const Scalar v = raw(x, y);
      return v * v;
    }, Scalar(0), Scalar(0), Scalar(1));
    scale_ = Scalar(1) / std::sqrt(norm2);
  }

  const WeightParams<Scalar>& params() const { return params_; }
  Scalar degree() const { return Scalar(1) + s_; }
  /// Multiplier applied to the raw profile to reach unit S_1 norm.
  Scalar scale() const { return scale_; }

  /// Unit-normalized profile value.
  Scalar operator()(Scalar x, Scalar y) const { return scale_ * raw(x, y); }

  /// Profile before normalization (u0(x, 0) = 2^s |x|^{1+s}/(1+s) for x < 0).
  Scalar raw(Scalar x, Scalar y) const {
    y = std::abs(y);
    if (y == Scalar(0)) {
      return x < Scalar(0) ? two_s_ * std::pow(-x, Scalar(1) + s_) / (Scalar(1) + s_) : Scalar(0);
    }
    const Scalar ys = std::pow(y, Scalar(1) + s_);
    if (x <= -y) {
      const Scalar xi = x / y;
      return two_s_ * std::pow(x * x + y * y, (Scalar(1) + s_) / Scalar(2)) / (Scalar(1) + s_) - ys * tail(xi);
    }
    const Scalar scale = std::pow(x * x + y * y, (Scalar(1) + s_) / Scalar(2));
    const Scalar integral = integrate_adaptive([this, y](Scalar t) { return profile_derivative(t, y, s_); }, -y, x,
                                               tol_ * scale);
    return ys * h_at_minus_one_ - integral;
  }

 private:
  Scalar q(Scalar t) const { return two_s_ * std::pow(t * t + Scalar(1), (Scalar(1) + s_) / Scalar(2)) / (Scalar(1) + s_); }

  // q'(t) + w(t, 1) for t < 0, arranged to avoid the cancellation of the two
  // O(|t|^s) terms: with A = sqrt(t^2 + 1), T = |t|, delta = 1/(A (A + T)),
  //   q' + w = 2^s A^{s-1} [A expm1(s log1p(-delta/2)) + 1/(A + T)].
  Scalar tail_integrand(Scalar t) const {
    const Scalar T = -t;
    const Scalar A = std::sqrt(t * t + Scalar(1));
    const Scalar delta = Scalar(1) / (A * (A + T));
    const Scalar bracket = A * std::expm1(s_ * std::log1p(-delta / Scalar(2))) + Scalar(1) / (A + T);
    return two_s_ * std::pow(A, s_ - Scalar(1)) * bracket;
  }

  // int_{-inf}^{xi} (q' + w(., 1)) dt for xi <= -1, via t = -1/v, v = z^{1/(1-s)},
  // which turns the |t|^{s-2} decay into a bounded integrand on (0, z_max].
  Scalar tail(Scalar xi) const {
    const Scalar kappa = Scalar(1) / (Scalar(1) - s_);
    const Scalar z_max = std::pow(-Scalar(1) / xi, Scalar(1) - s_);
    auto integrand = [this, kappa](Scalar z) {
      const Scalar v = std::pow(z, kappa);
      const Scalar t = -Scalar(1) / v;
      const Scalar dv_dz = kappa * std::pow(z, kappa - Scalar(1));
      return tail_integrand(t) * dv_dz / (v * v);
    };
    return integrate_adaptive(integrand, Scalar(0), z_max, tol_);
  }

  WeightParams<Scalar> params_;
  Scalar s_;
  Scalar tol_;
  Scalar two_s_{};
  Scalar h_at_minus_one_{};
  Scalar scale_{1};
};

}  // namespace fracobs
