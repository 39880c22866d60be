#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fracobs/frequency.hpp"
#include "fracobs/grid.hpp"
#include "fracobs/solver.hpp"

namespace fracobs {

enum class PointClass { Regular, Singular, Unresolved };

inline const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::Regular:
      return "Regular";
    case PointClass::Singular:
      return "Singular";
    case PointClass::Unresolved:
      return "Unresolved";
  }
  return "Unresolved";
}

/// A transition of the contact mask on the thin row.
template <typename Scalar>
struct FreeBoundaryPoint {
  /// Sub-node location of the transition.
  Scalar x{0};
  /// Last contact node before the transition.
  int node{0};
  /// +1 when the non-contact side lies at larger x, -1 otherwise.
  int outward{1};
};

template <typename Scalar>
struct ContactSet {
  std::vector<int> contact_nodes;
  std::vector<FreeBoundaryPoint<Scalar>> fb_points;
  Scalar feas_tol{0};
};

/// Thin-row contact nodes (u - phi <= feas_tol) and their transitions. Each
/// transition is located between the last contact node and the first free node
/// by matching (u - phi - feas_tol) to c (x - x_f)^{1+s} at the first two free
/// nodes; when those do not bracket a power law, linear interpolation is used.
template <typename Scalar>
ContactSet<Scalar> contact_set(const Solution<Scalar>& sol, const ObstacleProblem<Scalar>& problem, Scalar feas_tol) {
  const Grid<Scalar>& g = *problem.grid;
  const int nx = g.nx();
  const Scalar h = g.hx();
  const Scalar e = Scalar(1) / (Scalar(1) + g.params().s);
  ContactSet<Scalar> out;
  out.feas_tol = feas_tol;
  std::vector<Scalar> gap(nx);
  for (int i = 0; i < nx; ++i) gap[i] = sol.u(i, 0) - problem.phi[i] - feas_tol;
  std::vector<unsigned char> in(nx);
  for (int i = 0; i < nx; ++i) {
    in[i] = gap[i] <= Scalar(0) ? 1 : 0;
    if (in[i]) out.contact_nodes.push_back(i);
  }
  for (int i = 1; i + 1 < nx; ++i) {
    if (!in[i]) continue;
    for (int dir : {-1, 1}) {
      const int i1 = i + dir;
      if (in[i1]) continue;
      FreeBoundaryPoint<Scalar> p;
      p.node = i;
      p.outward = dir;
      const Scalar v0 = gap[i];
      const Scalar v1 = gap[i1];
      Scalar offset = h * (-v0) / (v1 - v0);
      const int i2 = i1 + dir;
      if (i2 >= 0 && i2 < nx && !in[i2] && gap[i2] > v1) {
        const Scalar q1 = std::pow(v1, e);
        const Scalar q2 = std::pow(gap[i2], e);
        offset = h - h * q1 / (q2 - q1);
      }
      offset = std::clamp(offset, Scalar(0), h);
      p.x = g.x(i) + Scalar(dir) * offset;
      out.fb_points.push_back(p);
    }
  }
  std::sort(out.fb_points.begin(), out.fb_points.end(),
            [](const auto& l, const auto& r) { return l.x < r.x; });
  return out;
}

/// Inclusive radius window for log-log fits.
template <typename Scalar>
struct FitWindow {
  Scalar lo{0};
  Scalar hi{0};
};

/// [8 h, 0.1 min(rx, ry)], the frozen window for exponent fits.
template <typename Scalar>
FitWindow<Scalar> exponent_window(const Grid<Scalar>& g) {
  return {Scalar(8) * std::max(g.hx(), g.hy()), Scalar(0.1) * std::min(g.spec().rx, g.spec().ry)};
}

/// [8 h, 0.25], clipped to the largest ball around x that fits in the grid.
template <typename Scalar>
FitWindow<Scalar> frequency_window(const Grid<Scalar>& g, Scalar x) {
  const Scalar room = std::min({g.spec().rx - std::abs(x), g.spec().ry}) * Scalar(0.999);
  return {Scalar(8) * std::max(g.hx(), g.hy()), std::min(Scalar(0.25), room)};
}

template <typename Scalar>
struct Classification {
  PointClass cls{PointClass::Unresolved};
  Scalar phi0{0};
  Scalar phi0_spread{0};
  bool phi0_stable{false};
  Scalar class_tol{0};
  FitWindow<Scalar> window{};
  /// Calibrated (or fixed) C0 and the monotonicity outcome at that value.
  Scalar C0{0};
  bool monotone{false};
  Scalar worst_dip{0};
  Scalar monotone_up_to{0};
  FrequencyProfile<Scalar> profile;
  PhiSeries<Scalar> series;
};

/// Either a fixed C0 or the smallest monotone value of the doubling ladder.
template <typename Scalar>
struct C0Policy {
  bool calibrate{true};
  Scalar fixed{0};
  Scalar tol{Scalar(1e-2)};
};

template <typename Scalar>
void check_class_tol(const WeightParams<Scalar>& params, Scalar class_tol) {
  const Scalar gap = params.singular_frequency() - params.regular_frequency();
  // Regular is an open band of half-width class_tol, so equality still separates the classes.
  if (!(class_tol > Scalar(0)) || !(class_tol <= gap / Scalar(2))) {
    throw DomainError("class_tol must lie in (0, (1 + a)/2] = (0, " + std::to_string(gap / Scalar(2)) + "]");
  }
}

template <typename Scalar>
PointClass classify_phi0(const WeightParams<Scalar>& params, Scalar phi0, Scalar class_tol) {
  if (std::abs(phi0 - params.regular_frequency()) < class_tol) return PointClass::Regular;
  if (phi0 >= params.singular_frequency() - class_tol) return PointClass::Singular;
  return PointClass::Unresolved;
}

/// Frequency scan around x on the thin space, Phi(0+) and the class it implies.
template <typename Scalar>
Classification<Scalar> classify_point(const Field<Scalar>& tilde, Scalar x, const SphereRule<Scalar>& rule,
                                      const FitWindow<Scalar>& window, const C0Policy<Scalar>& policy,
                                      Scalar class_tol = Scalar(0.25), int count = 24) {
  const WeightParams<Scalar>& params = tilde.grid().params();
  check_class_tol(params, class_tol);
  Classification<Scalar> c;
  c.class_tol = class_tol;
  c.window = window;
  c.profile = radial_scan(tilde, x, window.lo, window.hi, count, rule);
  if (policy.calibrate) {
    auto cal = calibrate_c0(c.profile, policy.tol);
    if (cal.found) {
      c.C0 = cal.C0;
      c.series = std::move(cal.series);
    } else {
      c.C0 = Scalar(1024);
      c.series = phi(c.profile, c.C0);
    }
  } else {
    c.C0 = policy.fixed;
    c.series = phi(c.profile, c.C0);
  }
  const auto rep = monotonicity_check(c.series, policy.tol);
  c.monotone = rep.pass;
  c.worst_dip = rep.worst_dip;
  c.monotone_up_to = rep.monotone_up_to;

  const auto p0 = phi_at_zero(c.series);
  c.phi0 = p0.value;
  c.phi0_spread = p0.spread;
  c.phi0_stable = p0.stable;
  c.cls = p0.stable ? classify_phi0(params, p0.value, class_tol) : PointClass::Unresolved;
  return c;
}

/// Supremum of |field| over the closed half ball B_r((cx, 0)) of the bilinear
/// interpolant: nodes inside the ball plus a dense sample of the bounding arc.
template <typename Scalar>
Scalar sup_abs_on_ball(const Field<Scalar>& field, Scalar cx, Scalar r) {
  const Grid<Scalar>& g = field.grid();
  if (!g.contains_ball(cx, Scalar(0), r)) throw DomainError("sup ball exceeds grid");
  Scalar m = 0;
  const int i_lo = std::max(0, static_cast<int>(std::floor((cx - r + g.spec().rx) / g.hx())));
  const int i_hi = std::min(g.nx() - 1, static_cast<int>(std::ceil((cx + r + g.spec().rx) / g.hx())));
  for (int j = 0; j < g.ny() && g.y(j) <= r; ++j) {
    for (int i = i_lo; i <= i_hi; ++i) {
      const Scalar dx = g.x(i) - cx;
      if (dx * dx + g.y(j) * g.y(j) <= r * r) m = std::max(m, std::abs(field(i, j)));
    }
  }
  const int arc = 4 * std::max(16, static_cast<int>(std::ceil(Scalar(4) * r / std::min(g.hx(), g.hy()))));
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int k = 0; k <= arc; ++k) {
    const Scalar t = pi * Scalar(k) / Scalar(arc);
    m = std::max(m, std::abs(interpolate(field, cx + r * std::cos(t), r * std::sin(t))));
  }
  return m;
}

template <typename Scalar>
struct ExponentFit {
  Scalar exponent{0};
  FitWindow<Scalar> window{};
  std::vector<Scalar> abscissae;
  std::vector<Scalar> values;
};

/// Slope of log sup_{B_r}|tilde| against log r over a log-spaced ladder in the window.
template <typename Scalar>
ExponentFit<Scalar> pointwise_decay_fit(const Field<Scalar>& tilde, Scalar x, const FitWindow<Scalar>& window,
                                        int count = 12) {
  ExponentFit<Scalar> fit;
  fit.window = window;
  fit.abscissae = log_spaced(window.lo, window.hi, count);
  std::vector<Scalar> lr, ls;
  for (Scalar r : fit.abscissae) {
    const Scalar sup = sup_abs_on_ball(tilde, x, r);
    if (!(sup > Scalar(0))) throw DomainError("decay fit: field vanishes identically on a ball");
    fit.values.push_back(sup);
    lr.push_back(std::log(r));
    ls.push_back(std::log(sup));
  }
  fit.exponent = least_squares_slope(lr, ls);
  return fit;
}

/// Derivative of the field along +-e1 by centred differences, one-sided at the ends.
template <typename Scalar>
Field<Scalar> thin_directional_derivative(const Field<Scalar>& field, int direction) {
  auto [gx, gy] = gradient(field);
  (void)gy;
  gx.values() *= Scalar(direction);
  return std::move(gx);
}

template <typename Scalar>
struct NondegeneracyFit {
  ExponentFit<Scalar> fit;
  /// Column of the vertical ray, inside the contact set.
  Scalar ray_x{0};
  /// Minimum of u_tau over nodes of B_{1/8}(point) and where it occurs.
  Scalar min_value{0};
  Scalar min_x{0};
  Scalar min_y{0};
  bool sign_ok{false};
};

/// Growth of u_tau against dist(X, Lambda) on a vertical ray rooted at a
/// contact node `offset` inside the contact set, where dist(X, Lambda) = y.
/// There the half-space profile gives u_tau ~ y^{2s} / (2 offset)^s, the
/// extremal rate of the nondegeneracy bound. The root is `offset` inside the
/// point, capped at a quarter of the contact run, and y ranges over
/// [2 hy, offset / 3]. Along the thin ray itself the
/// profile grows only like dist^s, so that ray does not expose the 2s rate.
template <typename Scalar>
NondegeneracyFit<Scalar> nondegeneracy_fit(const Field<Scalar>& field, const std::vector<unsigned char>& contact_mask,
                                           const FreeBoundaryPoint<Scalar>& point, PointClass cls,
                                           Scalar offset = Scalar(0.25),
                                           Scalar sign_tol = Scalar(1e-6)) {
  if (cls != PointClass::Regular) throw DomainError("nondegeneracy fit requires a Regular point");
  const Grid<Scalar>& g = field.grid();
  const Field<Scalar> ut = thin_directional_derivative(field, point.outward);
  NondegeneracyFit<Scalar> out;

  out.min_value = std::numeric_limits<Scalar>::infinity();
  const Scalar rho = Scalar(0.125);
  for (int j = 0; j < g.ny() && g.y(j) <= rho; ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const Scalar dx = g.x(i) - point.x;
      if (dx * dx + g.y(j) * g.y(j) > rho * rho) continue;
      if (ut(i, j) < out.min_value) {
        out.min_value = ut(i, j);
        out.min_x = g.x(i);
        out.min_y = g.y(j);
      }
    }
  }
  out.sign_ok = out.min_value >= -sign_tol;

  // Keep the root within the first quarter of the contact run, away from any
  // opposite transition where u_tau changes sign.
  int run = 0;
  for (int i = point.node; i >= 0 && i < g.nx() && contact_mask[i]; i -= point.outward) ++run;
  offset = std::min(offset, Scalar(0.25) * Scalar(run) * g.hx());
  const int col = g.nearest_x_index(point.x - Scalar(point.outward) * offset);
  if (col < 0 || col >= g.nx() || !contact_mask[col]) throw DomainError("nondegeneracy ray root is not a contact node");
  out.ray_x = g.x(col);
  // y^{2s} is the regime y << offset; the window scales with the root distance.
  const FitWindow<Scalar> window{Scalar(2) * g.hy(), std::abs(out.ray_x - point.x) / Scalar(3)};
  out.fit.window = window;
  std::vector<Scalar> ly, lv;
  for (int j = 1; j < g.ny(); ++j) {
    const Scalar y = g.y(j);
    if (y < window.lo * (Scalar(1) - Scalar(1e-12)) || y > window.hi * (Scalar(1) + Scalar(1e-12))) continue;
    const Scalar v = ut(col, j);
    if (!(v > Scalar(0))) throw DomainError("nondegeneracy fit: u_tau is not positive on the ray");
    out.fit.abscissae.push_back(y);
    out.fit.values.push_back(v);
    ly.push_back(std::log(y));
    lv.push_back(std::log(v));
  }
  if (ly.size() < 3) throw DomainError("nondegeneracy fit: fewer than three nodes in the window");
  out.fit.exponent = least_squares_slope(ly, lv);
  return out;
}

template <typename Scalar>
struct ConeCheck {
  Scalar min_derivative{0};
  Scalar min_x{0};
  Scalar min_y{0};
  int min_direction{0};
  bool pass{false};
};

/// Minimum of the directional derivatives over the fan (n = 1: signs of e1) and
/// the nodes of B_rho(point).
template <typename Scalar>
ConeCheck<Scalar> monotone_cone_check(const Field<Scalar>& field, Scalar x, const std::vector<int>& directions,
                                      Scalar rho = Scalar(0.125), Scalar tol = Scalar(1e-6)) {
  const Grid<Scalar>& g = field.grid();
  ConeCheck<Scalar> out;
  out.min_derivative = std::numeric_limits<Scalar>::infinity();
  for (int dir : directions) {
    const Field<Scalar> d = thin_directional_derivative(field, dir);
    for (int j = 0; j < g.ny() && g.y(j) <= rho; ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        const Scalar dx = g.x(i) - x;
        if (dx * dx + g.y(j) * g.y(j) > rho * rho) continue;
        if (d(i, j) < out.min_derivative) {
          out.min_derivative = d(i, j);
          out.min_x = g.x(i);
          out.min_y = g.y(j);
          out.min_direction = dir;
        }
      }
    }
  }
  out.pass = out.min_derivative >= -tol;
  return out;
}

}  // namespace fracobs
