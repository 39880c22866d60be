#pragma once

#include <cmath>
#include <vector>

#include "fracobs/frequency.hpp"
#include "fracobs/grid.hpp"
#include "fracobs/operator.hpp"
#include "fracobs/profile.hpp"

namespace fracobs {

/// Unit reference grid [-1, 1] x [0, 1] on which blowups are compared.
template <typename Scalar>
GridPtr<Scalar> reference_grid(const WeightParams<Scalar>& params, int nx = 129, int ny = 65) {
  return build_grid(GridSpec<Scalar>{Scalar(1), Scalar(1), nx, ny, params});
}

/// u_r(xi, eta) = u(center + r (xi, eta)) / d_r on the reference grid.
template <typename Scalar>
Field<Scalar> rescale(const Field<Scalar>& field, Scalar center_x, Scalar r, Scalar d_r, const GridPtr<Scalar>& ref) {
  if (!(d_r > Scalar(0))) throw DomainError("blowup normalization d_r must be positive");
  if (!field.grid().contains_ball(center_x, Scalar(0), r)) throw DomainError("blowup ball exceeds grid");
  return sample_field<Scalar>([&](Scalar xi, Scalar eta) {
    return interpolate(field, center_x + r * xi, r * eta) / d_r;
  }, ref);
}

/// d_r at a single radius, by the same sphere quadrature as radial_scan.
template <typename Scalar>
Scalar blowup_normalization(const Field<Scalar>& field, Scalar center_x, Scalar r, const SphereRule<Scalar>& rule) {
  const Scalar f = sphere_integral(field, rule, center_x, r, [](Scalar v) { return v * v; });
  return std::sqrt(std::pow(r, -field.grid().params().dim()) * f);
}

template <typename Scalar>
struct HomogeneityFit {
  Scalar k_from_phi{0};
  Scalar k_from_slope{0};
  Scalar phi0{0};
  Scalar window_lo{0};
  Scalar window_hi{0};
};

/// k from Phi(0+) = n + a + 2k, and from the slope of log d_r against log r
/// over the smallest resolved half-decade of radii.
template <typename Scalar>
HomogeneityFit<Scalar> fit_homogeneity(const FrequencyProfile<Scalar>& prof, const PhiSeries<Scalar>& series) {
  const auto p0 = phi_at_zero(series);
  if (!p0.stable) throw DomainError("Phi(0+) estimate is unstable across the smallest radii");
  HomogeneityFit<Scalar> fit;
  fit.phi0 = p0.value;
  fit.k_from_phi = (p0.value - prof.params.dim()) / Scalar(2);
  const Scalar top = prof.radii.front() * std::sqrt(Scalar(10));
  std::vector<Scalar> lr, ld;
  for (std::size_t k = 0; k < prof.radii.size(); ++k) {
    if (prof.radii[k] > top * (Scalar(1) + Scalar(1e-12)) && lr.size() >= 3) break;
    lr.push_back(std::log(prof.radii[k]));
    ld.push_back(std::log(prof.d_r[k]));
  }
  fit.window_lo = prof.radii.front();
  fit.window_hi = std::exp(lr.back());
  fit.k_from_slope = least_squares_slope(lr, ld);
  return fit;
}

template <typename Scalar>
struct ProfileDistance {
  Scalar distance{0};
  int orientation{1};
  Scalar distance_other{0};
};

/// Weighted L2(B_{1/2}, |y|^a) distance between a blowup (normalized to unit
/// S_1 norm) and the half-space profile under x -> orientation * x.
template <typename Scalar>
class ProfileComparator {
 public:
  ProfileComparator(const GridPtr<Scalar>& ref, const GlobalProfile<Scalar>& profile, int quad_points = 1024)
      : ref_(ref), rule_(SphereRule<Scalar>::make(ref->params(), quad_points)) {
    const Grid<Scalar>& g = *ref_;
    for (int j = 0; j + 1 < g.ny(); ++j) {
      const Scalar yc = g.y(j) + g.hy() / Scalar(2);
      for (int i = 0; i + 1 < g.nx(); ++i) {
        const Scalar xc = g.x(i) + g.hx() / Scalar(2);
        if (xc * xc + yc * yc > Scalar(0.25)) continue;
        cells_.push_back({i, j, g.y_edge_weight(j), profile(xc, yc), profile(-xc, yc)});
      }
    }
  }

  ProfileDistance<Scalar> operator()(const Field<Scalar>& rescaled) const {
    const Grid<Scalar>& g = *ref_;
    const Scalar norm2 = sphere_integral(rescaled, rule_, Scalar(0), Scalar(1), [](Scalar v) { return v * v; });
    if (!(norm2 > Scalar(0))) throw DomainError("blowup vanishes on the unit sphere");
    const Scalar inv = Scalar(1) / std::sqrt(norm2);
    const auto& u = rescaled.values();
    Scalar plus = 0, minus = 0;
    for (const Cell& c : cells_) {
      const Scalar uc = inv * Scalar(0.25) * (u(c.i, c.j) + u(c.i + 1, c.j) + u(c.i, c.j + 1) + u(c.i + 1, c.j + 1));
      plus += c.weight * (uc - c.profile_plus) * (uc - c.profile_plus);
      minus += c.weight * (uc - c.profile_minus) * (uc - c.profile_minus);
    }
    const Scalar area = Scalar(2) * g.hx() * g.hy();
    plus = std::sqrt(plus * area);
    minus = std::sqrt(minus * area);
    ProfileDistance<Scalar> out;
    out.orientation = plus <= minus ? 1 : -1;
    out.distance = std::min(plus, minus);
    out.distance_other = std::max(plus, minus);
    return out;
  }

 private:
  struct Cell {
    int i, j;
    Scalar weight;
    Scalar profile_plus;
    Scalar profile_minus;
  };
  GridPtr<Scalar> ref_;
  SphereRule<Scalar> rule_;
  std::vector<Cell> cells_;
};

template <typename Scalar>
ProfileDistance<Scalar> profile_distance(const Field<Scalar>& rescaled, const GlobalProfile<Scalar>& profile) {
  return ProfileComparator<Scalar>(rescaled.grid_ptr(), profile)(rescaled);
}

}  // namespace fracobs
