#include <doctest.h>

#include <cmath>
#include <complex>

#include "fracobs/blowup.hpp"
#include "support.hpp"

using namespace fracobs;
using fracobs::testing::square_grid;

TEST_CASE("a = 0 profile is (2 sqrt 2 / 3) Re((-x + iy)^{3/2})") {
  const GlobalProfile<double> prof(WeightParams<double>::make(0.0));
  const double c = 2 * std::sqrt(2.0) / 3;
  for (auto [x, y] : {std::pair{-0.7, 0.0}, {0.4, 0.0}, {0.3, 0.2}, {-0.2, 0.9}, {0.9, 0.05}, {-1.5, 0.3}}) {
    const double exact = c * std::pow(std::complex<double>(-x, y), 1.5).real();
    CHECK(prof.raw(x, y) == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("profile is homogeneous of degree 1 + s with unit sphere norm") {
  for (double a : {-0.5, 0.0, 0.5}) {
    const auto params = WeightParams<double>::make(a);
    const GlobalProfile<double> prof(params);
    const double k = 1 + params.s;
    CHECK(prof(-0.3 * 2, 0.2 * 2) == doctest::Approx(std::pow(2.0, k) * prof(-0.3, 0.2)).epsilon(1e-9));
    CHECK(prof(0.5, 0.0) == 0.0);
    // independent norm check with a plain midpoint rule in theta on (0, pi), doubled
    const int n = 200000;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      const double t = M_PI * (i + 0.5) / n;
      const double v = prof(std::cos(t), std::sin(t));
      sum += v * v * std::pow(std::sin(t), a);
    }
    CHECK(2 * sum * M_PI / n == doctest::Approx(1.0).epsilon(a < 0 ? 1e-3 : 1e-5));
  }
}

TEST_CASE("blowups of the sampled profile reproduce it") {
  for (double a : {-0.5, 0.0, 0.5}) {
    const auto params = WeightParams<double>::make(a);
    const GlobalProfile<double> prof(params);
    const auto g = square_grid(a, 257);
    const auto f = sample_field<double>([&](double x, double y) { return prof(x, y); }, g);
    const auto rule = SphereRule<double>::make(params, 4096);
    const auto ref = reference_grid(params);
    const ProfileComparator<double> cmp(ref, prof, 4096);
    for (double r : {0.4, 0.2}) {
      const double d = blowup_normalization(f, 0.0, r, rule);
      CHECK(d == doctest::Approx(std::pow(r, 1 + params.s)).epsilon(2e-3));
      const auto pd = cmp(rescale(f, 0.0, r, d, ref));
      CHECK(pd.orientation == 1);
      CHECK(pd.distance < 5e-3);
      CHECK(pd.distance_other > 10 * pd.distance);
    }
    const auto mirrored = sample_field<double>([&](double x, double y) { return prof(-x, y); }, g);
    const double d = blowup_normalization(mirrored, 0.0, 0.4, rule);
    CHECK(cmp(rescale(mirrored, 0.0, 0.4, d, ref)).orientation == -1);
  }
}

TEST_CASE("homogeneity fit on the profile") {
  for (double a : {-0.5, 0.0, 0.5}) {
    const auto params = WeightParams<double>::make(a);
    const GlobalProfile<double> prof(params);
    const auto g = square_grid(a, 257);
    const auto f = sample_field<double>([&](double x, double y) { return prof(x, y); }, g);
    const auto rule = SphereRule<double>::make(params, 4096);
    const auto p = radial_scan(f, 0.0, 8 * g->hx(), 0.25, 24, rule);
    const auto fit = fit_homogeneity(p, phi(p, 0.0));
    CHECK(fit.k_from_phi == doctest::Approx(1 + params.s).epsilon(0.02));
    CHECK(fit.k_from_slope == doctest::Approx(1 + params.s).epsilon(0.02));
  }
}
