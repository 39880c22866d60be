#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "fracobs/grid.hpp"
#include "fracobs/profile.hpp"
#include "fracobs/weights.hpp"

namespace fracobs {

template <typename Scalar>
struct LaResult {
  /// Finite-volume divergence of |y|^a grad u at interior nodes (j >= 1); zero elsewhere.
  Field<Scalar> interior_residual;
  /// Discrete -lim y^a du/dy at each thin-space node (j = 0).
  Eigen::Array<Scalar, Eigen::Dynamic, 1> boundary_flux;
};

/// Discrete L_a u = div(|y|^a grad u) in divergence form.
template <typename Scalar>
LaResult<Scalar> apply_la(const Field<Scalar>& field) {
  const Grid<Scalar>& g = field.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const auto& u = field.values();
  const Scalar ihx2 = Scalar(1) / (g.hx() * g.hx());
  const Scalar ihy2 = Scalar(1) / (g.hy() * g.hy());

  LaResult<Scalar> out{Field<Scalar>(field.grid_ptr()), Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(nx)};
  auto& res = out.interior_residual.values();
  for (int j = 1; j + 1 < ny; ++j) {
    const Scalar wx = g.x_edge_weight(j);
    const Scalar wup = g.y_edge_weight(j);
    const Scalar wdn = g.y_edge_weight(j - 1);
    for (int i = 1; i + 1 < nx; ++i) {
      res(i, j) = wx * (u(i + 1, j) - Scalar(2) * u(i, j) + u(i - 1, j)) * ihx2 +
                  (wup * (u(i, j + 1) - u(i, j)) - wdn * (u(i, j) - u(i, j - 1))) * ihy2;
    }
  }
  const Scalar trace_weight = edge_weight(Scalar(0), g.hy(), g.params().a);
  for (int i = 0; i < nx; ++i) out.boundary_flux[i] = -trace_weight * (u(i, 1) - u(i, 0)) / g.hy();
  return out;
}

/// Cell-sum quadrature over the full ball B_r(cx, 0) centred on the thin space:
/// cells of the stored half whose centres lie in the ball, doubled for y < 0.
/// The callback receives the cell centre, the cell-averaged value and gradient
/// (from the four corners) and must return the integrand without the weight.
template <typename Scalar, typename F>
Scalar ball_integral(const Field<Scalar>& field, Scalar cx, Scalar r, F&& integrand) {
  const Grid<Scalar>& g = field.grid();
  if (!g.contains_ball(cx, Scalar(0), r)) throw DomainError("ball exceeds grid");
  const auto& u = field.values();
  const Scalar hx = g.hx();
  const Scalar hy = g.hy();
  const Scalar r2 = r * r;
  const int i_lo = std::max(0, static_cast<int>(std::floor((cx - r + g.spec().rx) / hx)) - 1);
  const int i_hi = std::min(g.nx() - 2, static_cast<int>(std::ceil((cx + r + g.spec().rx) / hx)) + 1);
  const int j_hi = std::min(g.ny() - 2, static_cast<int>(std::ceil(r / hy)) + 1);
  Scalar sum = 0;
  for (int j = 0; j <= j_hi; ++j) {
    const Scalar yc = g.y(j) + hy / Scalar(2);
    const Scalar weight = g.y_edge_weight(j);
    for (int i = i_lo; i <= i_hi; ++i) {
      const Scalar xc = g.x(i) + hx / Scalar(2);
      const Scalar dx = xc - cx;
      if (dx * dx + yc * yc > r2) continue;
      const Scalar uc = Scalar(0.25) * (u(i, j) + u(i + 1, j) + u(i, j + 1) + u(i + 1, j + 1));
      const Scalar ux = Scalar(0.5) * ((u(i + 1, j) - u(i, j)) + (u(i + 1, j + 1) - u(i, j + 1))) / hx;
      const Scalar uy = Scalar(0.5) * ((u(i, j + 1) - u(i, j)) + (u(i + 1, j + 1) - u(i + 1, j))) / hy;
      sum += weight * integrand(xc, yc, uc, ux, uy);
    }
  }
  return Scalar(2) * sum * hx * hy;
}

/// int_{S_r(cx, 0)} field^p |y|^a dsigma for the given integrand of the interpolated value.
template <typename Scalar, typename F>
Scalar sphere_integral(const Field<Scalar>& field, const SphereRule<Scalar>& rule, Scalar cx, Scalar r, F&& integrand) {
  if (!field.grid().contains_ball(cx, Scalar(0), r)) throw DomainError("sphere exceeds grid");
  return rule.integrate([&](Scalar x, Scalar y) { return integrand(interpolate(field, x, y)); }, cx, Scalar(0), r);
}

enum class ReferenceKind { Constant, LinearX, ConjugateY, QuadBalance, Fundamental, ProfileDerivative, GlobalProfile };

/// Closed-form test functions for L_a. Fundamental is |X|^{-(n+a-1)}, and
/// -log|X| when n + a = 1.
template <typename Scalar>
class ReferenceSolution {
 public:
  ReferenceSolution(ReferenceKind kind, const WeightParams<Scalar>& params, Scalar scale = Scalar(1),
                    Scalar offset = Scalar(0))
      : kind_(kind), params_(params), scale_(scale), offset_(offset) {
    if (kind_ == ReferenceKind::GlobalProfile) profile_ = std::make_shared<const GlobalProfile<Scalar>>(params_);
  }

  ReferenceKind kind() const { return kind_; }
  const WeightParams<Scalar>& params() const { return params_; }
  const GlobalProfile<Scalar>* profile() const { return profile_.get(); }

  Scalar operator()(Scalar x, Scalar y) const { return scale_ * base(x, y) + offset_; }

 private:
  Scalar base(Scalar x, Scalar y) const {
    const Scalar a = params_.a;
    switch (kind_) {
      case ReferenceKind::Constant:
        return Scalar(1);
      case ReferenceKind::LinearX:
        return x;
      case ReferenceKind::ConjugateY:
        // |y|^{-a} y = sign(y) |y|^{1-a}
        return y == Scalar(0) ? Scalar(0) : std::copysign(std::pow(std::abs(y), Scalar(1) - a), y);
      case ReferenceKind::QuadBalance:
        return x * x - y * y / (Scalar(1) + a);
      case ReferenceKind::Fundamental: {
        const Scalar e = params_.dim() - Scalar(1);
        const Scalar rho = std::hypot(x, y);
        return e == Scalar(0) ? -std::log(rho) : std::pow(rho, -e);
      }
      case ReferenceKind::ProfileDerivative:
        return profile_derivative(x, std::abs(y), params_.s);
      case ReferenceKind::GlobalProfile:
        return (*profile_)(x, y);
    }
    return Scalar(0);
  }

  ReferenceKind kind_;
  WeightParams<Scalar> params_;
  Scalar scale_;
  Scalar offset_;
  std::shared_ptr<const GlobalProfile<Scalar>> profile_;
};

template <typename Scalar>
ReferenceSolution<Scalar> make_reference(ReferenceKind kind, const WeightParams<Scalar>& params) {
  return ReferenceSolution<Scalar>(kind, params);
}

/// sup / inf of the field over nodes in B_{r/2}(center); the field must be positive on B_r.
template <typename Scalar>
Scalar harnack_ratio(const Field<Scalar>& field, Scalar cx, Scalar cy, Scalar r) {
  const Grid<Scalar>& g = field.grid();
  if (!g.contains_ball(cx, cy, r)) throw DomainError("Harnack ball exceeds grid");
  Scalar sup = -std::numeric_limits<Scalar>::infinity();
  Scalar inf = std::numeric_limits<Scalar>::infinity();
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const Scalar dx = g.x(i) - cx;
      // distance to the nearer of (x, y) and its mirror (x, -y)
      const Scalar dy = std::min(std::abs(g.y(j) - cy), std::abs(g.y(j) + cy));
      const Scalar d2 = dx * dx + dy * dy;
      if (d2 > r * r) continue;
      const Scalar v = field(i, j);
      if (!(v > Scalar(0))) throw DomainError("Harnack ratio needs a positive field on B_r");
      if (d2 <= r * r / Scalar(4)) {
        sup = std::max(sup, v);
        inf = std::min(inf, v);
      }
    }
  }
  if (!(inf > Scalar(0)) || !std::isfinite(sup)) throw DomainError("no nodes inside B_{r/2}");
  return sup / inf;
}

/// field(0, 0) minus the weighted sphere average over S_r centred at the origin.
template <typename Scalar>
Scalar mean_value_gap(const Field<Scalar>& field, Scalar r, const SphereRule<Scalar>& rule) {
  const Scalar omega = rule.measure();
  const Scalar integral = sphere_integral(field, rule, Scalar(0), r, [](Scalar v) { return v; });
  const Scalar center = interpolate(field, Scalar(0), Scalar(0));
  return center - integral / (omega * std::pow(r, field.grid().params().dim()));
}

/// int_{S_r} |v - vbar|^2 / (r int_{B_r} |grad v|^2), weighted by |y|^a; empty when
/// the gradient vanishes identically.
template <typename Scalar>
std::optional<Scalar> poincare_ratio(const Field<Scalar>& field, Scalar cx, Scalar r, const SphereRule<Scalar>& rule) {
  const Scalar omega = rule.measure();
  const Scalar dim = field.grid().params().dim();
  const Scalar mean =
      sphere_integral(field, rule, cx, r, [](Scalar v) { return v; }) / (omega * std::pow(r, dim));
  const Scalar num = sphere_integral(field, rule, cx, r, [mean](Scalar v) { return (v - mean) * (v - mean); });
  const Scalar den = r * ball_integral(field, cx, r, [](Scalar, Scalar, Scalar, Scalar ux, Scalar uy) {
    return ux * ux + uy * uy;
  });
  const Scalar scale = std::max(std::abs(num), Scalar(1)) * std::numeric_limits<Scalar>::epsilon();
  if (!(std::abs(den) > scale)) return std::nullopt;
  return num / den;
}

}  // namespace fracobs
