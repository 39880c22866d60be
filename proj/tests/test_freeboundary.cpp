#include <doctest.h>

#include <cmath>

#include "fracobs/freeboundary.hpp"
#include "support.hpp"

using namespace fracobs;
using namespace fracobs::testing;

TEST_CASE("classification bands") {
  const auto p0 = WeightParams<double>::make(0.0);
  CHECK(classify_phi0(p0, 4.1, 0.25) == PointClass::Regular);
  CHECK(classify_phi0(p0, 5.0, 0.25) == PointClass::Singular);
  CHECK(classify_phi0(p0, 4.8, 0.25) == PointClass::Singular);
  CHECK(classify_phi0(p0, 4.5, 0.25) == PointClass::Unresolved);
  CHECK(classify_phi0(p0, 3.5, 0.25) == PointClass::Unresolved);
  const auto pm = WeightParams<double>::make(-0.5);
  CHECK_NOTHROW(check_class_tol(pm, 0.25));
  CHECK_THROWS_AS(check_class_tol(pm, 0.3), DomainError);
  CHECK_THROWS_AS(check_class_tol(p0, 0.0), DomainError);
  CHECK(std::string(to_string(PointClass::Unresolved)) == "Unresolved");
}

TEST_CASE("power-law locator recovers a synthetic free boundary exactly") {
  for (double a : {-0.5, 0.0, 0.5}) {
    const auto g = square_grid(a, 65);
    const double s = g->params().s;
    ObstacleProblem<double> p{g, ObstacleProblem<double>::Row::Zero(65), Field<double>(g), std::nullopt};
    Solution<double> sol;
    sol.u = Field<double>(g);
    const double feas = 1e-9;
    const double xf = 0.2137;
    const double xl = -0.4411;
    for (int i = 0; i < 65; ++i) {
      const double x = g->x(i);
      if (x > xf) sol.u(i, 0) = feas + 0.7 * std::pow(x - xf, 1 + s);
      if (x < xl) sol.u(i, 0) = feas + 0.3 * std::pow(xl - x, 1 + s);
    }
    const auto cs = contact_set(sol, p, feas);
    REQUIRE(cs.fb_points.size() == 2);
    CHECK(cs.fb_points[0].x == doctest::Approx(xl).epsilon(1e-12));
    CHECK(cs.fb_points[0].outward == -1);
    CHECK(cs.fb_points[1].x == doctest::Approx(xf).epsilon(1e-12));
    CHECK(cs.fb_points[1].outward == 1);
    CHECK(g->x(cs.fb_points[1].node) <= xf);
    CHECK(g->x(cs.fb_points[1].node) > xf - g->hx());
  }
}

TEST_CASE("parabolic obstacle has two symmetric free boundary points") {
  const auto p = parabola_problem(0.0, 257);
  const auto sol = solve_obstacle(p, tight());
  const auto cs = contact_set(sol, p, sol.feas_tol);
  REQUIRE(cs.fb_points.size() == 2);
  CHECK(cs.fb_points[0].x == doctest::Approx(-cs.fb_points[1].x).epsilon(1e-8));
  // the 513-node solve puts the point at 0.32325; allow two cells
  CHECK(std::abs(cs.fb_points[1].x - 0.32325) <= 2 * p.grid->hx());
}

TEST_CASE("decay, nondegeneracy and cone on the sampled profile") {
  for (double a : {-0.5, 0.0, 0.5}) {
    const auto params = WeightParams<double>::make(a);
    const GlobalProfile<double> prof(params);
    const auto g = square_grid(a, 257);
    const auto f = sample_field<double>([&](double x, double y) { return prof(x, y); }, g);
    std::vector<unsigned char> mask(257);
    for (int i = 0; i < 257; ++i) mask[i] = g->x(i) >= -1e-12 ? 1 : 0;
    const FreeBoundaryPoint<double> fp{0.0, g->nearest_x_index(0.0), -1};

    const auto decay = pointwise_decay_fit(f, 0.0, exponent_window(*g));
    CHECK(decay.exponent == doctest::Approx(1 + params.s).epsilon(0.02));

    const auto nd = nondegeneracy_fit(f, mask, fp, PointClass::Regular);
    CHECK(std::abs(nd.fit.exponent - 2 * params.s) <= 0.15);
    CHECK(nd.sign_ok);
    CHECK(nd.ray_x > 0);

    CHECK(monotone_cone_check(f, 0.0, {-1}).pass);
    CHECK_FALSE(monotone_cone_check(f, 0.0, {1}).pass);
    CHECK_THROWS_AS(nondegeneracy_fit(f, mask, fp, PointClass::Singular), DomainError);
  }
}

TEST_CASE("classify_point marks the profile Regular") {
  const auto params = WeightParams<double>::make(0.5);
  const GlobalProfile<double> prof(params);
  const auto g = square_grid(0.5, 257);
  const auto f = sample_field<double>([&](double x, double y) { return prof(x, y); }, g);
  const auto rule = SphereRule<double>::make(params, 4096);
  const auto c = classify_point(f, 0.0, rule, frequency_window(*g, 0.0), C0Policy<double>{});
  CHECK(c.cls == PointClass::Regular);
  CHECK(c.phi0 == doctest::Approx(4.0).epsilon(0.025));
  CHECK(c.monotone);
}

TEST_CASE("fit windows") {
  const auto g = square_grid(0.0, 257);
  const auto w = exponent_window(*g);
  CHECK(w.lo == doctest::Approx(8.0 / 128));
  CHECK(w.hi == doctest::Approx(0.1));
  CHECK(frequency_window(*g, 0.9).hi == doctest::Approx(0.0999));
  CHECK(frequency_window(*g, 0.0).hi == doctest::Approx(0.25));
}

TEST_CASE("a degree-two polynomial is Singular with decay 2") {
  const auto params = WeightParams<double>::make(0.0);
  const auto g = square_grid(0.0, 257);
  const auto f = sample_field<double>([](double x, double y) { return x * x - y * y; }, g);
  const auto rule = SphereRule<double>::make(params, 4096);
  const auto c = classify_point(f, 0.0, rule, frequency_window(*g, 0.0), C0Policy<double>{});
  CHECK(c.cls == PointClass::Singular);
  CHECK(c.phi0 == doctest::Approx(5.0).epsilon(0.02));
  CHECK(pointwise_decay_fit(f, 0.0, exponent_window(*g)).exponent == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("sign check flags an injected dip") {
  const auto params = WeightParams<double>::make(0.0);
  const GlobalProfile<double> prof(params);
  const auto g = square_grid(0.0, 257);
  auto f = sample_field<double>([&](double x, double y) { return prof(x, y); }, g);
  std::vector<unsigned char> mask(257);
  for (int i = 0; i < 257; ++i) mask[i] = g->x(i) >= -1e-12 ? 1 : 0;
  const int c = g->nearest_x_index(0.0);
  // a bump on the free side makes u_{-x} negative just left of it
  f(c - 6, 2) += 0.1;
  const FreeBoundaryPoint<double> fp{0.0, c, -1};
  const auto nd = nondegeneracy_fit(f, mask, fp, PointClass::Regular);
  CHECK_FALSE(nd.sign_ok);
  CHECK(nd.min_value < -1e-6);
  CHECK(nd.min_y == doctest::Approx(g->y(2)));
}
