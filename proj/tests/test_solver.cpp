#include <doctest.h>

#include <cmath>

#include "fracobs/operator.hpp"
#include "fracobs/solver.hpp"
#include "support.hpp"

using namespace fracobs;
using namespace fracobs::testing;

TEST_CASE("projected gradient on a single unknown") {
  // min x^2 - x subject to x >= lower: the minimiser is max(1/2, lower)
  Eigen::SparseMatrix<double> K(1, 1);
  K.insert(0, 0) = 2.0;
  Eigen::VectorXd b(1), x0 = Eigen::VectorXd::Zero(1), lo(1);
  b << 1.0;
  for (double lower : {0.0, 1.0, -3.0}) {
    lo << lower;
    const auto r = projected_gradient<double>(K, b, lo, {1}, x0, 1e-12);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(std::max(0.5, lower)));
  }
}

TEST_CASE("PSOR agrees with the projected-gradient oracle") {
  const auto p = parabola_problem(0.0, 33);
  const auto psor = solve_obstacle(p, tight(1e-12));
  const auto oracle = oracle_solve(p, 1e-11);
  REQUIRE(psor.converged);
  REQUIRE(oracle.converged);
  CHECK((psor.u.values() - oracle.u.values()).abs().maxCoeff() <= 1e-6);
  CHECK(std::abs(discrete_energy(psor.u) - discrete_energy(oracle.u)) <= 1e-12);
  CHECK(psor.contact_mask == oracle.contact_mask);
}

TEST_CASE("PSOR sweeps never increase the energy") {
  const auto p = parabola_problem(0.5, 33);
  auto o = tight(1e-9);
  o.omega = 1.5;
  o.record_energy = true;
  const auto s = solve_obstacle(p, o);
  REQUIRE(s.energies.size() > 2);
  for (std::size_t k = 1; k < s.energies.size(); ++k) CHECK(s.energies[k] <= s.energies[k - 1] + 1e-14);
}

TEST_CASE("solution satisfies complementarity and symmetry") {
  const auto p = parabola_problem(-0.5, 65);
  const auto s = solve_obstacle(p, tight());
  REQUIRE(s.converged);
  const auto rep = complementarity_report(s, p);
  CHECK(rep.ok());
  CHECK(rep.contact_size > 0);
  for (int i = 0; i < 65; ++i) CHECK(s.u(i, 0) == doctest::Approx(s.u(64 - i, 0)).epsilon(1e-8));
}

TEST_CASE("sweep cap reports non-convergence") {
  const auto p = parabola_problem(0.0, 33);
  SolverOptions<double> o;
  o.max_iter = 1;
  const auto s = solve_obstacle(p, o);
  CHECK_FALSE(s.converged);
  CHECK(s.iterations == 1);
}

TEST_CASE("problem validation") {
  auto p = parabola_problem(0.0, 33);
  p.phi[0] = 1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  auto q = parabola_problem(0.0, 33);
  CHECK_THROWS_AS(solve_obstacle(q, SolverOptions<double>{2.0}), DomainError);
  CHECK_THROWS_AS(oracle_solve(parabola_problem(0.0, 129)), DomainError);
}

TEST_CASE("manufactured profile is reproduced") {
  const auto p = profile_problem(0.0, 65);
  const auto s = solve_obstacle(p, tight());
  REQUIRE(s.converged);
  const double err = (s.u.values() - p.dirichlet.values()).abs().maxCoeff();
  CHECK(err < 5e-3);
}

TEST_CASE("tilde transform removes the obstacle and centres the Laplacian") {
  const auto p = parabola_problem(0.0, 65);
  const auto s = solve_obstacle(p, tight());
  int last = -1;
  for (int i = 0; i < 65; ++i) if (s.contact_mask[i]) last = i;
  REQUIRE(last > 0);
  const auto t = to_tilde(s, p, last);
  CHECK(t.laplacian_at_center == doctest::Approx(-4.0));
  CHECK(t.g.abs().maxCoeff() == doctest::Approx(0.0));
  const double y = p.grid->y(3);
  CHECK(t.tilde_u(10, 3) == doctest::Approx(s.u(10, 3) - p.phi[10] - 4.0 * y * y / 2.0));
  CHECK_THROWS_AS(to_tilde(s, p, 32), DomainError);  // interior of the contact set
}

TEST_CASE("inactive obstacle gives the zero solution") {
  auto p = parabola_problem(0.0, 33);
  p.phi.setConstant(-1.0);
  p.laplacian_phi = ObstacleProblem<double>::Row::Zero(33);
  const auto s = solve_obstacle(p, tight());
  CHECK(s.u.values().abs().maxCoeff() <= 1e-12);
  CHECK(complementarity_report(s, p).contact_size == 0);
  CHECK(oracle_solve(p).u.values().abs().maxCoeff() <= 1e-10);
}

TEST_CASE("feasibility violation is reported at the injected node") {
  const auto p = parabola_problem(0.0, 33);
  auto s = solve_obstacle(p, tight());
  s.u(7, 0) = p.phi[7] - 0.1;
  const auto rep = complementarity_report(s, p);
  CHECK(rep.max_feasibility_violation == doctest::Approx(0.1));
  CHECK(rep.feasibility_node == 7);
  CHECK_FALSE(rep.feasible);
}

TEST_CASE("raising the obstacle never lowers the solution") {
  const auto lo = parabola_problem(0.5, 65);
  auto hi = lo;
  for (int i = 1; i + 1 < 65; ++i) hi.phi[i] += 0.05 * std::cos(lo.grid->x(i));
  const auto u1 = solve_obstacle(lo, tight());
  const auto u2 = solve_obstacle(hi, tight());
  CHECK((u2.u.values() - u1.u.values()).minCoeff() >= -1e-8);
}

TEST_CASE("thin trace is semiconvex up to the obstacle curvature") {
  const auto p = parabola_problem(0.0, 129);
  const auto s = solve_obstacle(p, tight());
  const double h = p.grid->hx();
  double worst = 0;
  for (int i = 1; i + 1 < 129; ++i) worst = std::min(worst, (s.u(i + 1, 0) - 2 * s.u(i, 0) + s.u(i - 1, 0)) / (h * h));
  CHECK(worst >= -(4.0 + 1e-6));
}

TEST_CASE("nodes with a positive reaction lie in the contact set") {
  // the reaction is the full thin-row balance; the one-sided flux alone keeps an O(h) x-curvature term
  const auto p = parabola_problem(0.0, 129);
  const auto s = solve_obstacle(p, tight());
  const EnergyStencil<double> st(*p.grid);
  int positive = 0;
  for (int i = 1; i + 1 < 129; ++i) {
    const auto [ku, diag] = detail::stiffness_row(st, s.u, i, 0);
    if (ku / diag > s.feas_tol) {
      ++positive;
      CHECK(s.contact_mask[i]);
    }
  }
  CHECK(positive > 0);
}

TEST_CASE("g of a cubic obstacle is linear in the distance to the centre") {
  RunConfig cfg;
  cfg.nx = 129;
  cfg.ny = 65;
  cfg.obstacle_expression = "0.5 - 2*x^2 + 0.1*x^3";
  const auto p = build_problem(cfg);
  const auto s = solve_obstacle(p, tight());
  int last = -1;
  for (int i = 0; i < 129; ++i) if (s.contact_mask[i]) last = i;
  const auto t = to_tilde(s, p, last);
  const double c = p.grid->x(last);
  CHECK(t.laplacian_at_center == doctest::Approx(-4.0 + 0.6 * c));
  for (int i : {0, 40, 100, 128}) CHECK(t.g[i] == doctest::Approx(0.6 * (p.grid->x(i) - c)));
  CHECK(t.g_lipschitz == doctest::Approx(0.6));
  CHECK(t.tilde_u(last, 0) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK((t.tilde_u.values().col(0) >= -s.feas_tol).all());
}
