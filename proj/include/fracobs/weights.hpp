#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracobs {

/// Raised for inputs outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an iterative numerical procedure fails to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Order s = (1 - a)/2 of the fractional Laplacian realised by the weight |y|^a.
template <typename Scalar>
Scalar s_from_a(Scalar a) {
  if (!(a > Scalar(-1) && a < Scalar(1))) {
    throw DomainError("weight exponent a must lie in the open interval (-1, 1)");
  }
  return (Scalar(1) - a) / Scalar(2);
}

template <typename Scalar>
struct WeightParams {
  Scalar a{0};
  Scalar s{Scalar(0.5)};
  int n{1};

  static WeightParams make(Scalar a, int n = 1) {
    if (n != 1) {
      throw DomainError("only the thin dimension n = 1 is implemented, got n = " + std::to_string(n));
    }
    return WeightParams{a, s_from_a(a), n};
  }

  /// Homogeneous dimension n + a of the weighted measure on a sphere.
  Scalar dim() const { return Scalar(n) + a; }

  /// Frequency of the half-space profile, n + a + 2(1 + s).
  Scalar regular_frequency() const { return dim() + Scalar(2) * (Scalar(1) + s); }

  /// Lower bound n + a + 4 of the frequency at singular points.
  Scalar singular_frequency() const { return dim() + Scalar(4); }
};

/// Cell average (1/(hi - lo)) * int_lo^hi |t|^a dt, via the odd antiderivative |t|^a t / (a + 1).
template <typename Scalar>
Scalar edge_weight(Scalar y_lo, Scalar y_hi, Scalar a) {
  if (!(y_lo < y_hi)) {
    throw DomainError("edge_weight needs y_lo < y_hi");
  }
  if (a == Scalar(0)) return Scalar(1);
  auto primitive = [a](Scalar t) { return std::copysign(std::pow(std::abs(t), a + Scalar(1)), t) / (a + Scalar(1)); };
  return (primitive(y_hi) - primitive(y_lo)) / (y_hi - y_lo);
}

/// Weighted quadrature on the unit circle for integrals of the form
/// int_{S_1} f |y|^a dsigma. Each quarter arc is mapped from its singular end
/// (theta in {0, pi, 2 pi}) by theta = (pi/2) t^p with p = 2/(1 + a), and the
/// composite midpoint rule is applied in t. The map absorbs |sin theta|^a so
/// the transformed integrand is smooth for constant f.
template <typename Scalar>
struct SphereRule {
  std::vector<Scalar> cos_theta;
  std::vector<Scalar> sin_theta;
  std::vector<Scalar> weight;  // includes |sin theta|^a and the Jacobian
  Scalar a{0};
  int n{1};

  static SphereRule make(const WeightParams<Scalar>& params, int quad_points) {
    if (params.n != 1) throw DomainError("sphere quadrature implemented for n = 1 only");
    if (quad_points < 16) throw DomainError("sphere quadrature needs at least 16 points");
    if (quad_points % 4 != 0) throw DomainError("sphere quadrature point count must be a multiple of 4");

    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar half_pi = pi / Scalar(2);
    const Scalar p = Scalar(2) / (Scalar(1) + params.a);
    const int per_quarter = quad_points / 4;

    SphereRule rule;
    rule.a = params.a;
    rule.n = params.n;
    rule.cos_theta.reserve(quad_points);
    rule.sin_theta.reserve(quad_points);
    rule.weight.reserve(quad_points);

    for (int quarter = 0; quarter < 4; ++quarter) {
      for (int k = 0; k < per_quarter; ++k) {
        const Scalar t = (Scalar(k) + Scalar(0.5)) / Scalar(per_quarter);
        const Scalar phi = half_pi * std::pow(t, p);  // distance from the singular end
        const Scalar jac = half_pi * p * std::pow(t, p - Scalar(1)) / Scalar(per_quarter);
        const Scalar sp = std::sin(phi);
        const Scalar cp = std::cos(phi);
        // quarter 0: theta = phi, 1: pi - phi, 2: pi + phi, 3: 2 pi - phi
        const Scalar c = (quarter == 0 || quarter == 3) ? cp : -cp;
        const Scalar s = (quarter <= 1) ? sp : -sp;
        rule.cos_theta.push_back(c);
        rule.sin_theta.push_back(s);
        rule.weight.push_back(jac * (params.a == Scalar(0) ? Scalar(1) : std::pow(sp, params.a)));
      }
    }
    return rule;
  }

  std::size_t size() const { return weight.size(); }

  /// int_{S_r(center)} f |y|^a dsigma, with f evaluated at absolute coordinates.
  template <typename F>
  Scalar integrate(F&& f, Scalar cx, Scalar cy, Scalar r) const {
    Scalar sum = 0;
    for (std::size_t k = 0; k < weight.size(); ++k) {
      sum += weight[k] * f(cx + r * cos_theta[k], cy + r * sin_theta[k]);
    }
    return sum * std::pow(r, Scalar(n) + a);
  }

  Scalar measure() const {
    Scalar sum = 0;
    for (Scalar w : weight) sum += w;
    return sum;
  }
};

/// omega_{n+a} = int_{S_1} |y|^a dsigma by graded midpoint quadrature.
template <typename Scalar>
Scalar surface_weight_measure(const WeightParams<Scalar>& params, int quad_points) {
  return SphereRule<Scalar>::make(params, quad_points).measure();
}

template <typename Scalar>
struct WeightedMeasureTable {
  Scalar omega_n_plus_a{0};
  /// 1/((n + a - 1) omega); absent when n + a = 1, where the fundamental
  /// solution is logarithmic.
  std::optional<Scalar> c_n_a;

  static WeightedMeasureTable make(const WeightParams<Scalar>& params, int quad_points) {
    WeightedMeasureTable table;
    table.omega_n_plus_a = surface_weight_measure(params, quad_points);
    const Scalar denom = params.dim() - Scalar(1);
    if (denom != Scalar(0)) table.c_n_a = Scalar(1) / (denom * table.omega_n_plus_a);
    return table;
  }
};

}  // namespace fracobs
