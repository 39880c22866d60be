#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "fracobs/grid.hpp"
#include "fracobs/operator.hpp"
#include "fracobs/weights.hpp"

namespace fracobs {

template <typename Scalar>
std::vector<Scalar> log_spaced(Scalar r_min, Scalar r_max, int count) {
  if (!(r_min > Scalar(0)) || !(r_max > r_min) || count < 2) throw DomainError("invalid radius ladder");
  std::vector<Scalar> radii(count);
  const Scalar step = std::log(r_max / r_min) / Scalar(count - 1);
  for (int k = 0; k < count; ++k) radii[k] = r_min * std::exp(step * Scalar(k));
  radii.back() = r_max;
  return radii;
}

/// Least-squares slope of ys against xs.
template <typename Scalar>
Scalar least_squares_slope(const std::vector<Scalar>& xs, const std::vector<Scalar>& ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) throw DomainError("slope fit needs at least two points");
  Scalar mx = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= Scalar(n);
  my /= Scalar(n);
  Scalar sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  if (sxx == Scalar(0)) throw DomainError("slope fit needs distinct abscissae");
  return sxy / sxx;
}

/// Radial quantities of a field around a thin-space point, per radius:
///   F = int_{S_r} u^2, D = H = int_{B_r} |grad u|^2, G = int_{B_r} u^2 (all
///   weighted by |y|^a), d_r = (r^{-(n+a)} F)^{1/2}.
template <typename Scalar>
struct FrequencyProfile {
  Scalar center_x{0};
  WeightParams<Scalar> params{};
  std::vector<Scalar> radii;
  std::vector<Scalar> F, D, G, H, d_r;
};

template <typename Scalar>
FrequencyProfile<Scalar> radial_scan(const Field<Scalar>& field, Scalar center_x, const std::vector<Scalar>& radii,
                                     const SphereRule<Scalar>& rule) {
  if (radii.size() < 3) throw DomainError("radial scan needs at least three radii");
  const Grid<Scalar>& g = field.grid();
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (k > 0 && !(radii[k] > radii[k - 1])) throw DomainError("radii must be increasing");
  }
  if (!g.contains_ball(center_x, Scalar(0), radii.back())) throw DomainError("scan ball exceeds grid");

  FrequencyProfile<Scalar> prof;
  prof.center_x = center_x;
  prof.params = g.params();
  prof.radii = radii;
  const Scalar dim = g.params().dim();
  for (Scalar r : radii) {
    const Scalar f = sphere_integral(field, rule, center_x, r, [](Scalar v) { return v * v; });
    const Scalar d = ball_integral(field, center_x, r, [](Scalar, Scalar, Scalar, Scalar ux, Scalar uy) {
      return ux * ux + uy * uy;
    });
    const Scalar gg = ball_integral(field, center_x, r, [](Scalar, Scalar, Scalar uc, Scalar, Scalar) { return uc * uc; });
    prof.F.push_back(f);
    prof.D.push_back(d);
    prof.H.push_back(d);
    prof.G.push_back(gg);
    prof.d_r.push_back(std::sqrt(std::pow(r, -dim) * f));
  }
  return prof;
}

template <typename Scalar>
FrequencyProfile<Scalar> radial_scan(const Field<Scalar>& field, Scalar center_x, Scalar r_min, Scalar r_max, int count,
                                     const SphereRule<Scalar>& rule) {
  if (count < 16) throw DomainError("radial scan needs at least 16 radii");
  return radial_scan(field, center_x, log_spaced(r_min, r_max, count), rule);
}

/// Phi(r) = (r + C0 r^2) d/dr log max(F(r), r^{n+a+4}), with the derivative
/// taken as d log M / d log r by symmetric differences on the radius ladder.
template <typename Scalar>
struct PhiSeries {
  std::vector<Scalar> radii;
  std::vector<Scalar> phi;
  /// d log max(F, r^{n+a+4}) / d log r, i.e. Phi at C0 = 0.
  std::vector<Scalar> log_slope;
  /// true where F(r) >= r^{n+a+4}.
  std::vector<unsigned char> f_branch;
  Scalar C0{0};
};

template <typename Scalar>
PhiSeries<Scalar> phi(const FrequencyProfile<Scalar>& prof, Scalar C0) {
  const std::size_t n = prof.radii.size();
  if (n < 3) throw DomainError("frequency needs at least three radii");
  const Scalar cap = prof.params.singular_frequency();
  std::vector<Scalar> logm(n), logr(n);
  PhiSeries<Scalar> s;
  s.C0 = C0;
  s.radii = prof.radii;
  s.f_branch.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Scalar r = prof.radii[k];
    const Scalar comparison = std::pow(r, cap);
    const Scalar m = std::max(prof.F[k], comparison);
    if (!(m > Scalar(0)) || !std::isfinite(m)) throw DomainError("frequency undefined: vanishing F and comparison branch");
    s.f_branch[k] = prof.F[k] >= comparison ? 1 : 0;
    logm[k] = std::log(m);
    logr[k] = std::log(r);
  }
  s.log_slope.resize(n);
  s.phi.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
    s.log_slope[k] = (logm[hi] - logm[lo]) / (logr[hi] - logr[lo]);
    s.phi[k] = (Scalar(1) + C0 * prof.radii[k]) * s.log_slope[k];
  }
  return s;
}

template <typename Scalar>
struct MonotonicityReport {
  /// Most negative consecutive increment Phi(r_{k+1}) - Phi(r_k) (positive if none).
  Scalar worst_dip{std::numeric_limits<Scalar>::infinity()};
  /// Index k of the worst increment.
  int worst_index{-1};
  /// Largest radius up to which every increment is >= -tol.
  Scalar monotone_up_to{0};
  bool pass{false};
};

template <typename Scalar>
MonotonicityReport<Scalar> monotonicity_check(const PhiSeries<Scalar>& series, Scalar tol) {
  MonotonicityReport<Scalar> rep;
  const std::size_t n = series.phi.size();
  rep.monotone_up_to = n ? series.radii.back() : Scalar(0);
  bool broken = false;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const Scalar inc = series.phi[k + 1] - series.phi[k];
    if (inc < rep.worst_dip) {
      rep.worst_dip = inc;
      rep.worst_index = static_cast<int>(k);
    }
    if (!broken && inc < -tol) {
      broken = true;
      rep.monotone_up_to = series.radii[k];
    }
  }
  rep.pass = !broken;
  return rep;
}

template <typename Scalar>
struct C0Calibration {
  bool found{false};
  Scalar C0{0};
  /// (C0, worst dip) for every ladder value tried.
  std::vector<std::pair<Scalar, Scalar>> scan;
  Scalar best_dip{-std::numeric_limits<Scalar>::infinity()};
  PhiSeries<Scalar> series;
  MonotonicityReport<Scalar> report;
};

/// Smallest C0 in {0, 1, 2, 4, ..., 1024} making Phi monotone at tol.
template <typename Scalar>
C0Calibration<Scalar> calibrate_c0(const FrequencyProfile<Scalar>& prof, Scalar tol) {
  C0Calibration<Scalar> cal;
  std::vector<Scalar> ladder{Scalar(0)};
  for (int v = 1; v <= 1024; v *= 2) ladder.push_back(Scalar(v));
  for (Scalar c0 : ladder) {
    auto series = phi(prof, c0);
    const auto rep = monotonicity_check(series, tol);
    cal.scan.emplace_back(c0, rep.worst_dip);
    if (rep.worst_dip > cal.best_dip) cal.best_dip = rep.worst_dip;
    if (rep.pass) {
      cal.found = true;
      cal.C0 = c0;
      cal.series = std::move(series);
      cal.report = rep;
      return cal;
    }
  }
  return cal;
}

template <typename Scalar>
struct DivergenceIdentity {
  Scalar lhs{0};
  Scalar rhs{0};
  /// Sum of the absolute integrands of both sides, the normalization scale.
  Scalar magnitude{0};
  Scalar relative_residual{0};
};

/// Both sides of
///   r int_{S_r} (|u_tau|^2 - |u_nu|^2) |y|^a = int_{B_r} ((n+a-1)|grad u|^2 - 2 <X, grad u> g) |y|^a,
/// where L_a u = |y|^a g off the contact set. The residual is normalized by the
/// integrals of the absolute values of each integrand.
template <typename Scalar, typename G>
DivergenceIdentity<Scalar> divergence_identity_residual(const Field<Scalar>& field, G&& g_of_x, Scalar center_x,
                                                        Scalar r, const SphereRule<Scalar>& rule) {
  const Grid<Scalar>& grid = field.grid();
  if (!grid.contains_ball(center_x, Scalar(0), r)) throw DomainError("identity ball exceeds grid");
  const auto [gx, gy] = gradient(field);
  Scalar lhs = 0, lhs_abs = 0;
  const Scalar rpow = std::pow(r, grid.params().dim());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const Scalar c = rule.cos_theta[k];
    const Scalar s = rule.sin_theta[k];
    const auto [ux, uy] = interpolate_gradient(gx, gy, center_x + r * c, r * s);
    const Scalar un = ux * c + uy * s;
    const Scalar ut = -ux * s + uy * c;
    lhs += rule.weight[k] * (ut * ut - un * un);
    lhs_abs += rule.weight[k] * (ut * ut + un * un);
  }
  lhs *= r * rpow;
  lhs_abs *= r * rpow;

  const Scalar nam1 = grid.params().dim() - Scalar(1);
  const Scalar rhs = ball_integral(field, center_x, r, [&](Scalar x, Scalar y, Scalar, Scalar ux, Scalar uy) {
    return nam1 * (ux * ux + uy * uy) - Scalar(2) * ((x - center_x) * ux + y * uy) * g_of_x(x);
  });
  const Scalar rhs_abs = ball_integral(field, center_x, r, [&](Scalar x, Scalar y, Scalar, Scalar ux, Scalar uy) {
    return std::abs(nam1) * (ux * ux + uy * uy) + Scalar(2) * std::abs(((x - center_x) * ux + y * uy) * g_of_x(x));
  });

  DivergenceIdentity<Scalar> out;
  out.lhs = lhs;
  out.rhs = rhs;
  out.magnitude = lhs_abs + rhs_abs;
  out.relative_residual = std::abs(lhs - rhs) / (out.magnitude + Scalar(1e-300));
  return out;
}

template <typename Scalar>
struct DecayBound {
  Scalar mu{0};
  Scalar max_ratio{0};
  Scalar ratio_at_smallest{0};
  Scalar ratio_at_largest{0};
  bool pass{false};
};

/// F(r) / r^mu across the ladder; passes when the ratio stays finite and grows
/// by at most 10x from the largest to the smallest radius.
template <typename Scalar>
DecayBound<Scalar> decay_bound_check(const FrequencyProfile<Scalar>& prof, Scalar mu) {
  DecayBound<Scalar> out;
  out.mu = mu;
  for (std::size_t k = 0; k < prof.radii.size(); ++k) {
    const Scalar ratio = prof.F[k] / std::pow(prof.radii[k], mu);
    out.max_ratio = std::max(out.max_ratio, ratio);
  }
  out.ratio_at_smallest = prof.F.front() / std::pow(prof.radii.front(), mu);
  out.ratio_at_largest = prof.F.back() / std::pow(prof.radii.back(), mu);
  out.pass = std::isfinite(out.max_ratio) && out.ratio_at_smallest <= Scalar(10) * out.ratio_at_largest;
  return out;
}

/// Phi(0+) estimate: the C0-free log slope at the smallest radius. Stable when
/// the three smallest radii agree within the guard.
template <typename Scalar>
struct PhiZero {
  Scalar value{0};
  Scalar spread{0};
  bool stable{false};
};

template <typename Scalar>
PhiZero<Scalar> phi_at_zero(const PhiSeries<Scalar>& series, Scalar guard = Scalar(0.1)) {
  if (series.log_slope.size() < 3) throw DomainError("Phi(0+) needs at least three radii");
  PhiZero<Scalar> out;
  out.value = series.log_slope.front();
  const Scalar lo = std::min({series.log_slope[0], series.log_slope[1], series.log_slope[2]});
  const Scalar hi = std::max({series.log_slope[0], series.log_slope[1], series.log_slope[2]});
  out.spread = hi - lo;
  out.stable = out.spread <= guard;
  return out;
}

}  // namespace fracobs
