#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "fracobs/grid.hpp"
#include "fracobs/operator.hpp"

namespace fracobs {

/// Thin obstacle problem on a half-strip grid. Lateral (i = 0, nx - 1) and top
/// (j = ny - 1) nodes carry Dirichlet data; the thin row j = 0 carries u >= phi.
template <typename Scalar>
struct ObstacleProblem {
  using Row = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  GridPtr<Scalar> grid;
  Row phi;
  Field<Scalar> dirichlet;
  /// Analytic Laplacian of phi on the thin row, when phi comes from an expression.
  std::optional<Row> laplacian_phi;

  void validate() const {
    if (!grid) throw DomainError("obstacle problem has no grid");
    const int nx = grid->nx();
    if (phi.size() != nx) throw DomainError("obstacle samples do not match the grid");
    if (dirichlet.values().rows() != nx || dirichlet.values().cols() != grid->ny()) {
      throw DomainError("Dirichlet data do not match the grid");
    }
    if (!phi.allFinite()) throw DomainError("obstacle has non-finite samples");
    if (!dirichlet.values().allFinite()) throw DomainError("Dirichlet data have non-finite values");
    if (!(phi[0] <= dirichlet(0, 0)) || !(phi[nx - 1] <= dirichlet(nx - 1, 0))) {
      throw DomainError("obstacle must not exceed the Dirichlet trace at the lateral ends of the thin row");
    }
    if (laplacian_phi && laplacian_phi->size() != nx) throw DomainError("obstacle Laplacian does not match the grid");
  }

  /// Delta phi at thin node i, analytic when available, else the centred second difference.
  Scalar laplacian_at(int i) const {
    if (laplacian_phi) return (*laplacian_phi)[i];
    const int nx = grid->nx();
    const int c = std::clamp(i, 1, nx - 2);
    const Scalar h = grid->hx();
    return (phi[c + 1] - Scalar(2) * phi[c] + phi[c - 1]) / (h * h);
  }
};

template <typename Scalar>
struct SolverOptions {
  Scalar omega{Scalar(1.5)};
  /// Sweep cap; 0 selects 50 * nx * ny.
  long max_iter{0};
  Scalar tol{Scalar(1e-8)};
  /// Sweeps between evaluations of the true residual.
  int check_every{10};
  /// Record the discrete energy after every sweep (for monotonicity tests).
  bool record_energy{false};
};

template <typename Scalar>
struct Solution {
  Field<Scalar> u;
  std::vector<unsigned char> contact_mask;
  long iterations{0};
  bool converged{false};
  /// Scaled residual at each check, the last entry is the final residual.
  std::vector<Scalar> residuals;
  std::vector<Scalar> energies;
  Scalar tol{0};
  Scalar feas_tol{0};
  const char* ordering{"lexicographic"};
};

/// Edge coefficients of the discrete energy J(u) = 1/2 sum_e c_e (u_p - u_q)^2.
/// Thin-row x-edges and the (Dirichlet) top row see a half-height control volume.
template <typename Scalar>
struct EnergyStencil {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> cx;  // x-edges in row j
  Eigen::Array<Scalar, Eigen::Dynamic, 1> cy;  // y-edge between rows j and j + 1

  explicit EnergyStencil(const Grid<Scalar>& g) : cx(g.ny()), cy(g.ny() - 1) {
    for (int j = 0; j < g.ny(); ++j) {
      const Scalar height = (j == 0 || j == g.ny() - 1) ? g.hy() / Scalar(2) : g.hy();
      cx[j] = g.x_edge_weight(j) * height / g.hx();
    }
    for (int j = 0; j + 1 < g.ny(); ++j) cy[j] = g.y_edge_weight(j) * g.hx() / g.hy();
  }
};

template <typename Scalar>
Scalar discrete_energy(const Field<Scalar>& u) {
  const Grid<Scalar>& g = u.grid();
  const EnergyStencil<Scalar> st(g);
  Scalar sum = 0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i + 1 < g.nx(); ++i) {
      const Scalar d = u(i + 1, j) - u(i, j);
      sum += st.cx[j] * d * d;
    }
  }
  for (int j = 0; j + 1 < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const Scalar d = u(i, j + 1) - u(i, j);
      sum += st.cy[j] * d * d;
    }
  }
  return sum / Scalar(2);
}

namespace detail {

template <typename Scalar>
bool is_unknown(const Grid<Scalar>& g, int i, int j) {
  return i > 0 && i + 1 < g.nx() && j + 1 < g.ny();
}

/// (K u)_p and K_pp at an unknown node.
template <typename Scalar>
std::pair<Scalar, Scalar> stiffness_row(const EnergyStencil<Scalar>& st, const Field<Scalar>& u, int i, int j) {
  const Scalar cxj = st.cx[j];
  const Scalar cup = st.cy[j];
  const Scalar cdn = j > 0 ? st.cy[j - 1] : Scalar(0);
  const Scalar diag = Scalar(2) * cxj + cup + cdn;
  Scalar ku = diag * u(i, j) - cxj * (u(i - 1, j) + u(i + 1, j)) - cup * u(i, j + 1);
  if (j > 0) ku -= cdn * u(i, j - 1);
  return {ku, diag};
}

}  // namespace detail

/// Natural residual of the discrete complementarity system, in units of u:
/// |Ku|/K_pp at interior unknowns, |min(u - phi, Ku/K_pp)| on the thin row.
template <typename Scalar>
Scalar scaled_residual(const Field<Scalar>& u, const ObstacleProblem<Scalar>& problem) {
  const Grid<Scalar>& g = u.grid();
  const EnergyStencil<Scalar> st(g);
  Scalar worst = 0;
  for (int j = 0; j + 1 < g.ny(); ++j) {
    for (int i = 1; i + 1 < g.nx(); ++i) {
      const auto [ku, diag] = detail::stiffness_row(st, u, i, j);
      const Scalar r = ku / diag;
      const Scalar v = j == 0 ? std::abs(std::min(u(i, 0) - problem.phi[i], r)) : std::abs(r);
      worst = std::max(worst, v);
    }
  }
  return worst;
}

template <typename Scalar>
Field<Scalar> initial_guess(const ObstacleProblem<Scalar>& problem) {
  Field<Scalar> u = problem.dirichlet;
  const Grid<Scalar>& g = *problem.grid;
  for (int j = 0; j + 1 < g.ny(); ++j) {
    for (int i = 1; i + 1 < g.nx(); ++i) u(i, j) = j == 0 ? std::max(Scalar(0), problem.phi[i]) : Scalar(0);
  }
  return u;
}

/// Projected SOR for the discrete energy over {u(x_i, 0) >= phi_i}. Stops when
/// the scaled residual falls below tol; otherwise returns the last iterate with
/// converged = false.
template <typename Scalar>
Solution<Scalar> solve_obstacle(const ObstacleProblem<Scalar>& problem, const SolverOptions<Scalar>& opts = {},
                                std::optional<Field<Scalar>> start = std::nullopt) {
  problem.validate();
  if (!(opts.omega > Scalar(0) && opts.omega < Scalar(2))) throw DomainError("relaxation factor must lie in (0, 2)");
  const Grid<Scalar>& g = *problem.grid;
  const EnergyStencil<Scalar> st(g);
  const long max_iter = opts.max_iter > 0 ? opts.max_iter : 50L * g.nx() * g.ny();

  Solution<Scalar> sol;
  sol.tol = opts.tol;
  sol.feas_tol = Scalar(10) * opts.tol;
  sol.u = start ? *start : initial_guess(problem);
  if (start) {
    for (int i = 0; i < g.nx(); ++i) sol.u(i, g.ny() - 1) = problem.dirichlet(i, g.ny() - 1);
    for (int j = 0; j < g.ny(); ++j) {
      sol.u(0, j) = problem.dirichlet(0, j);
      sol.u(g.nx() - 1, j) = problem.dirichlet(g.nx() - 1, j);
    }
  }
  Field<Scalar>& u = sol.u;
  const Scalar omega = opts.omega;

  long it = 0;
  while (it < max_iter) {
    for (int j = 0; j + 1 < g.ny(); ++j) {
      const Scalar cxj = st.cx[j];
      const Scalar cup = st.cy[j];
      const Scalar cdn = j > 0 ? st.cy[j - 1] : Scalar(0);
      const Scalar inv_diag = Scalar(1) / (Scalar(2) * cxj + cup + cdn);
      for (int i = 1; i + 1 < g.nx(); ++i) {
        Scalar sum = cxj * (u(i - 1, j) + u(i + 1, j)) + cup * u(i, j + 1);
        if (j > 0) sum += cdn * u(i, j - 1);
        Scalar next = u(i, j) + omega * (sum * inv_diag - u(i, j));
        if (j == 0) next = std::max(next, problem.phi[i]);
        u(i, j) = next;
      }
    }
    ++it;
    if (opts.record_energy) sol.energies.push_back(discrete_energy(u));
    if (it % opts.check_every == 0 || it == max_iter) {
      const Scalar r = scaled_residual(u, problem);
      sol.residuals.push_back(r);
      if (r < opts.tol) {
        sol.converged = true;
        break;
      }
    }
  }
  sol.iterations = it;
  sol.contact_mask.assign(g.nx(), 0);
  for (int i = 0; i < g.nx(); ++i) sol.contact_mask[i] = (u(i, 0) - problem.phi[i] <= sol.feas_tol) ? 1 : 0;
  return sol;
}

/// Projected gradient descent with fixed step 1/L for
///   min 1/2 x^T K x - b^T x  subject to x_k >= lower_k where constrained_k.
/// Stops when the infinity norm of the gradient map L (x - P(x - grad/L)) is below tol.
template <typename Scalar>
struct ProjectedGradientResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  long iterations{0};
  Scalar gradient_map_norm{0};
  Scalar lipschitz{0};
  bool converged{false};
};

template <typename Scalar>
Scalar power_iteration_bound(const Eigen::SparseMatrix<Scalar>& K, int iterations = 500) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vec v = Vec::Ones(K.rows()) / std::sqrt(Scalar(K.rows()));
  Scalar lambda = 0;
  for (int k = 0; k < iterations; ++k) {
    Vec w = K * v;
    const Scalar norm = w.norm();
    if (norm == Scalar(0)) return Scalar(0);
    lambda = norm;
    v = w / norm;
  }
  // Gershgorin bound as a ceiling for the power estimate's shortfall.
  Scalar gersh = 0;
  for (int c = 0; c < K.outerSize(); ++c) {
    Scalar row = 0;
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(K, c); it; ++it) row += std::abs(it.value());
    gersh = std::max(gersh, row);
  }
  return std::min(gersh, Scalar(1.05) * lambda);
}

template <typename Scalar>
ProjectedGradientResult<Scalar> projected_gradient(const Eigen::SparseMatrix<Scalar>& K,
                                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lower,
                                                   const std::vector<unsigned char>& constrained,
                                                   Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x0, Scalar tol,
                                                   long max_iter = 50'000'000) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  ProjectedGradientResult<Scalar> out;
  out.lipschitz = power_iteration_bound(K);
  const Scalar step = Scalar(1) / out.lipschitz;
  auto project = [&](Vec& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (constrained[k]) v[k] = std::max(v[k], lower[k]);
    }
  };
  Vec x = std::move(x0);
  project(x);
  for (long it = 0; it < max_iter; ++it) {
    const Vec grad = K * x - b;
    Vec next = x - step * grad;
    project(next);
    out.gradient_map_norm = (x - next).template lpNorm<Eigen::Infinity>() * out.lipschitz;
    x = std::move(next);
    out.iterations = it + 1;
    if (out.gradient_map_norm < tol) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  return out;
}

/// Independent verification solve: assembles the stiffness matrix of the same
/// energy from its edge list and runs projected gradient to gradient-map norm < tol.
template <typename Scalar>
Solution<Scalar> oracle_solve(const ObstacleProblem<Scalar>& problem, Scalar tol = Scalar(1e-10)) {
  problem.validate();
  const Grid<Scalar>& g = *problem.grid;
  if (g.nx() > 65 || g.ny() > 33) throw DomainError("oracle_solve is limited to grids of at most 65 x 33 nodes");
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const int nx = g.nx();
  const int ny = g.ny();
  std::vector<int> index(static_cast<std::size_t>(nx) * ny, -1);
  int n_unknown = 0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (detail::is_unknown(g, i, j)) index[j * nx + i] = n_unknown++;
    }
  }

  const EnergyStencil<Scalar> st(g);
  std::vector<Eigen::Triplet<Scalar>> trip;
  Vec b = Vec::Zero(n_unknown);
  // Each edge (p, q) with coefficient c adds c (u_p - u_q)^2 / 2 to the energy.
  auto add_edge = [&](int ip, int jp, int iq, int jq, Scalar c) {
    const int p = index[jp * nx + ip];
    const int q = index[jq * nx + iq];
    if (p >= 0) trip.emplace_back(p, p, c);
    if (q >= 0) trip.emplace_back(q, q, c);
    if (p >= 0 && q >= 0) {
      trip.emplace_back(p, q, -c);
      trip.emplace_back(q, p, -c);
    } else if (p >= 0) {
      b[p] += c * problem.dirichlet(iq, jq);
    } else if (q >= 0) {
      b[q] += c * problem.dirichlet(ip, jp);
    }
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) add_edge(i, j, i + 1, j, st.cx[j]);
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i) add_edge(i, j, i, j + 1, st.cy[j]);

  Eigen::SparseMatrix<Scalar> K(n_unknown, n_unknown);
  K.setFromTriplets(trip.begin(), trip.end());

  Vec lower = Vec::Constant(n_unknown, -std::numeric_limits<Scalar>::infinity());
  std::vector<unsigned char> constrained(n_unknown, 0);
  for (int i = 1; i + 1 < nx; ++i) {
    const int p = index[i];
    lower[p] = problem.phi[i];
    constrained[p] = 1;
  }
  const auto pg = projected_gradient<Scalar>(K, b, lower, constrained, Vec::Zero(n_unknown), tol);

  Solution<Scalar> sol;
  sol.u = problem.dirichlet;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int p = index[j * nx + i];
      if (p >= 0) sol.u(i, j) = pg.x[p];
    }
  }
  sol.iterations = pg.iterations;
  sol.converged = pg.converged;
  sol.residuals.push_back(pg.gradient_map_norm);
  sol.tol = tol;
  sol.feas_tol = Scalar(10) * tol;
  sol.ordering = "projected-gradient";
  sol.contact_mask.assign(nx, 0);
  for (int i = 0; i < nx; ++i) sol.contact_mask[i] = (sol.u(i, 0) - problem.phi[i] <= sol.feas_tol) ? 1 : 0;
  return sol;
}

template <typename Scalar>
struct ComplementarityReport {
  Scalar max_feasibility_violation{0};
  int feasibility_node{-1};
  /// min over thin nodes of the discrete reaction (K u)_p / K_pp, in units of u.
  Scalar min_reaction{0};
  /// min over thin nodes of the weighted Neumann trace from apply_la.
  Scalar min_boundary_flux{0};
  /// max over thin nodes of |min(u - phi, reaction)|.
  Scalar max_complementarity{0};
  /// max over thin nodes of (u - phi) * reaction.
  Scalar max_complementarity_product{0};
  int contact_size{0};
  Scalar feas_tol{0};
  Scalar flux_tol{0};
  Scalar comp_tol{0};
  bool feasible{false};
  bool flux_ok{false};
  bool complementary{false};

  bool ok() const { return feasible && flux_ok && complementary; }
};

template <typename Scalar>
ComplementarityReport<Scalar> complementarity_report(const Solution<Scalar>& sol, const ObstacleProblem<Scalar>& problem) {
  const Grid<Scalar>& g = *problem.grid;
  const EnergyStencil<Scalar> st(g);
  const auto la = apply_la(sol.u);
  ComplementarityReport<Scalar> rep;
  rep.feas_tol = sol.feas_tol;
  rep.flux_tol = sol.feas_tol;
  rep.comp_tol = sol.feas_tol;
  rep.min_reaction = std::numeric_limits<Scalar>::infinity();
  rep.min_boundary_flux = std::numeric_limits<Scalar>::infinity();
  for (int i = 1; i + 1 < g.nx(); ++i) {
    const Scalar gap = sol.u(i, 0) - problem.phi[i];
    if (-gap > rep.max_feasibility_violation) {
      rep.max_feasibility_violation = -gap;
      rep.feasibility_node = i;
    }
    const auto [ku, diag] = detail::stiffness_row(st, sol.u, i, 0);
    const Scalar reaction = ku / diag;
    rep.min_reaction = std::min(rep.min_reaction, reaction);
    rep.min_boundary_flux = std::min(rep.min_boundary_flux, la.boundary_flux[i]);
    rep.max_complementarity = std::max(rep.max_complementarity, std::abs(std::min(gap, reaction)));
    rep.max_complementarity_product = std::max(rep.max_complementarity_product, gap * reaction);
    if (gap <= sol.feas_tol) ++rep.contact_size;
  }
  rep.feasible = rep.max_feasibility_violation <= rep.feas_tol;
  rep.flux_ok = rep.min_reaction >= -rep.flux_tol;
  rep.complementary = rep.max_complementarity <= rep.comp_tol;
  return rep;
}

/// u - phi + Delta phi(center) y^2 / (2(1 + a)), analysed around a free boundary node.
template <typename Scalar>
struct TildeField {
  Field<Scalar> tilde_u;
  /// g(x_i) = Delta phi(x_i) - Delta phi(center) on the thin row.
  Eigen::Array<Scalar, Eigen::Dynamic, 1> g;
  int center_index{0};
  Scalar center_x{0};
  Scalar laplacian_at_center{0};
  /// max |L_a tilde u| / (|y|^a |x - center|) over interior nodes with |x - center| >= hx.
  Scalar la_bound_constant{0};
  /// max |g(x)| / |x - center| over thin nodes (a Lipschitz estimate for g).
  Scalar g_lipschitz{0};

  Scalar g_at(Scalar x) const {
    const Grid<Scalar>& grid = tilde_u.grid();
    const Scalar f = (x + grid.spec().rx) / grid.hx();
    const int i = std::clamp(static_cast<int>(std::floor(f)), 0, grid.nx() - 2);
    const Scalar t = f - Scalar(i);
    return (Scalar(1) - t) * g[i] + t * g[i + 1];
  }
};

/// True when thin node i is in contact and has a non-contact neighbour.
inline bool is_free_boundary_node(const std::vector<unsigned char>& mask, int i) {
  const int n = static_cast<int>(mask.size());
  if (i <= 0 || i + 1 >= n || !mask[i]) return false;
  return !mask[i - 1] || !mask[i + 1];
}

template <typename Scalar>
TildeField<Scalar> to_tilde(const Solution<Scalar>& sol, const ObstacleProblem<Scalar>& problem, int center_index) {
  const Grid<Scalar>& g = *problem.grid;
  if (!is_free_boundary_node(sol.contact_mask, center_index)) {
    std::ostringstream msg;
    msg << "node " << center_index << " is not a free boundary node";
    throw DomainError(msg.str());
  }
  const Scalar a = g.params().a;
  TildeField<Scalar> t;
  t.center_index = center_index;
  t.center_x = g.x(center_index);
  t.laplacian_at_center = problem.laplacian_at(center_index);
  const Scalar c = t.laplacian_at_center / (Scalar(2) * (Scalar(1) + a));
  t.tilde_u = sol.u;
  for (int j = 0; j < g.ny(); ++j) {
    const Scalar y2 = g.y(j) * g.y(j);
    for (int i = 0; i < g.nx(); ++i) t.tilde_u(i, j) = sol.u(i, j) - problem.phi[i] + c * y2;
  }
  t.g.resize(g.nx());
  for (int i = 0; i < g.nx(); ++i) t.g[i] = problem.laplacian_at(i) - t.laplacian_at_center;

  for (int i = 0; i < g.nx(); ++i) {
    const Scalar d = std::abs(g.x(i) - t.center_x);
    if (d >= g.hx() * Scalar(0.5)) t.g_lipschitz = std::max(t.g_lipschitz, std::abs(t.g[i]) / d);
  }
  const auto la = apply_la(t.tilde_u);
  for (int j = 1; j + 1 < g.ny(); ++j) {
    const Scalar wy = a == Scalar(0) ? Scalar(1) : std::pow(g.y(j), a);
    for (int i = 1; i + 1 < g.nx(); ++i) {
      const Scalar d = std::abs(g.x(i) - t.center_x);
      if (d < g.hx() * Scalar(0.5)) continue;
      t.la_bound_constant = std::max(t.la_bound_constant, std::abs(la.interior_residual(i, j)) / (wy * d));
    }
  }
  return t;
}

}  // namespace fracobs
