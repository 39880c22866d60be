#include <doctest.h>

#include <cmath>

#include "fracobs/frequency.hpp"
#include "support.hpp"

using namespace fracobs;
using fracobs::testing::square_grid;

namespace {

FrequencyProfile<double> synthetic(const std::vector<double>& radii, double a, double (*F)(double)) {
  FrequencyProfile<double> p;
  p.params = WeightParams<double>::make(a);
  p.radii = radii;
  for (double r : radii) {
    p.F.push_back(F(r));
    p.D.push_back(0);
    p.G.push_back(0);
    p.H.push_back(0);
    p.d_r.push_back(std::sqrt(F(r) / std::pow(r, 1 + a)));
  }
  return p;
}

}  // namespace

TEST_CASE("log spacing and least squares") {
  const auto r = log_spaced(0.01, 1.0, 5);
  REQUIRE(r.size() == 5);
  CHECK(r.front() == doctest::Approx(0.01));
  CHECK(r[2] == doctest::Approx(0.1));
  CHECK(r.back() == doctest::Approx(1.0));
  CHECK(least_squares_slope<double>({0, 1, 2, 3}, {1, 3.5, 6, 8.5}) == doctest::Approx(2.5));
}

TEST_CASE("Phi of a power law is its exponent, clipped at the comparison branch") {
  const auto radii = log_spaced(0.01, 0.3, 16);
  const auto p = synthetic(radii, 0.0, [](double r) { return std::pow(r, 4.0); });
  const auto s = phi(p, 0.0);
  for (double v : s.phi) CHECK(v == doctest::Approx(4.0));
  // C0 multiplies by (1 + C0 r)
  const auto s2 = phi(p, 2.0);
  CHECK(s2.phi[3] == doctest::Approx(4.0 * (1 + 2 * radii[3])));
  // F = r^7 lies below r^{n+a+4} = r^5 for r < 1: the comparison branch gives 5
  const auto q = synthetic(radii, 0.0, [](double r) { return std::pow(r, 7.0); });
  const auto sq = phi(q, 0.0);
  CHECK(sq.phi[5] == doctest::Approx(5.0));
  CHECK_FALSE(sq.f_branch[5]);
}

TEST_CASE("monotonicity check finds the dip and C0 calibration lifts it") {
  const auto radii = log_spaced(0.02, 0.25, 16);
  // slope 4 - r: Phi decreases mildly in r at C0 = 0
  const auto p = synthetic(radii, 0.0, [](double r) { return std::pow(r, 4.0) * std::exp(-r); });
  const auto rep = monotonicity_check(phi(p, 0.0), 1e-4);
  CHECK_FALSE(rep.pass);
  CHECK(rep.worst_dip < 0);
  const auto cal = calibrate_c0(p, 1e-4);
  CHECK(cal.found);
  CHECK(cal.C0 >= 1.0);
  CHECK(monotonicity_check(cal.series, 1e-4).pass);
}

TEST_CASE("Phi(0+) stability guard") {
  PhiSeries<double> s;
  s.log_slope = {4.0, 4.02, 4.05, 4.3};
  auto z = phi_at_zero(s);
  CHECK(z.value == 4.0);
  CHECK(z.spread == doctest::Approx(0.05));
  CHECK(z.stable);
  s.log_slope = {4.0, 4.3, 4.05};
  CHECK_FALSE(phi_at_zero(s).stable);
}

TEST_CASE("radial scan of x gives Phi = n + a + 2") {
  for (double a : {-0.5, 0.5}) {
    const auto g = square_grid(a, 129);
    const auto rule = SphereRule<double>::make(g->params(), 4096);
    const auto f = sample_field<double>([](double x, double) { return x; }, g);
    const auto prof = radial_scan(f, 0.0, 0.05, 0.5, 16, rule);
    for (double v : phi(prof, 0.0).phi) CHECK(v == doctest::Approx(3.0 + a).epsilon(1e-3));
    // d_r of a degree-one function is |r| times its unit-sphere norm
    CHECK(prof.d_r[8] / prof.radii[8] == doctest::Approx(prof.d_r[0] / prof.radii[0]).epsilon(1e-3));
  }
}

TEST_CASE("divergence identity holds for x with g = 0") {
  // r int_S (u_tau^2 - u_nu^2) = (n + a - 1) int_B |grad u|^2 for u = x
  for (double a : {-0.5, 0.0, 0.5}) {
    const auto g = square_grid(a, 257);
    const auto rule = SphereRule<double>::make(g->params(), 4096);
    const auto f = sample_field<double>([](double x, double) { return x; }, g);
    const auto di = divergence_identity_residual(f, [](double) { return 0.0; }, 0.0, 0.5, rule);
    CHECK(di.relative_residual <= 0.01);
  }
}

TEST_CASE("decay bound compares F against r^mu") {
  const auto radii = log_spaced(0.01, 0.25, 16);
  const auto p = synthetic(radii, 0.0, [](double r) { return std::pow(r, 4.0); });
  CHECK(decay_bound_check(p, 4.0).pass);
  CHECK_FALSE(decay_bound_check(p, 5.0).pass);
}
