#pragma once

#include "fracobs/pipeline.hpp"
#include "fracobs/profile.hpp"
#include "fracobs/solver.hpp"

namespace fracobs::testing {

inline GridPtr<double> square_grid(double a, int nx, double r = 1.0) {
  return build_grid(GridSpec<double>{r, r, nx, (nx + 1) / 2, WeightParams<double>::make(a)});
}

/// Obstacle 0.5 - 2x^2 with zero Dirichlet data on [-1, 1] x [0, 1].
inline ObstacleProblem<double> parabola_problem(double a, int nx) {
  RunConfig cfg;
  cfg.a = a;
  cfg.nx = nx;
  cfg.ny = (nx + 1) / 2;
  return build_problem(cfg);
}

/// phi = 0 with the half-space profile as Dirichlet data; the exact solution is the profile.
inline ObstacleProblem<double> profile_problem(double a, int nx) {
  const auto g = square_grid(a, nx);
  const GlobalProfile<double> prof(g->params());
  auto d = sample_field<double>([&](double x, double y) { return prof(x, y); }, g);
  return ObstacleProblem<double>{g, ObstacleProblem<double>::Row::Zero(nx), d,
                                 ObstacleProblem<double>::Row::Zero(nx)};
}

inline SolverOptions<double> tight(double tol = 1e-10) {
  SolverOptions<double> o;
  o.omega = 1.95;
  o.tol = tol;
  return o;
}

}  // namespace fracobs::testing
