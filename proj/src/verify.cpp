#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "fracobs/blowup.hpp"
#include "fracobs/freeboundary.hpp"
#include "fracobs/operator.hpp"
#include "fracobs/pipeline.hpp"

namespace fracobs {

namespace {

GridPtr<double> square_grid(double a, int nx) {
  return build_grid(GridSpec<double>{1.0, 1.0, nx, (nx + 1) / 2, WeightParams<double>::make(a)});
}

Field<double> sample_reference(ReferenceKind kind, const GridPtr<double>& g) {
  const ReferenceSolution<double> ref(kind, g->params());
  return sample_field<double>([&](double x, double y) { return ref(x, y); }, g);
}

/// Sum of |L_a u| h_x h_y over interior nodes.
double residual_mass(const Field<double>& f) {
  const auto& g = f.grid();
  return apply_la(f).interior_residual.values().abs().sum() * g.hx() * g.hy();
}

double residual_max(const Field<double>& f) { return apply_la(f).interior_residual.values().abs().maxCoeff(); }

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

ObstacleProblem<double> default_problem(double a, int nx) {
  RunConfig cfg;
  cfg.a = a;
  cfg.nx = nx;
  cfg.ny = (nx + 1) / 2;
  return build_problem(cfg);
}

}  // namespace

std::vector<VerifyRow> verify_battery(const VerifyOptions& opts) {
  std::vector<VerifyRow> rows;
  auto add = [&](const std::string& check, double a, double value, const std::string& threshold, bool pass,
                 const std::string& detail = {}) { rows.push_back({check, a, value, threshold, pass, detail}); };

  for (double a : opts.a_values) {
    const auto params = WeightParams<double>::make(a);
    const double exact = 2.0 * std::beta(0.5, (a + 1.0) / 2.0);
    const double omega_tol = a >= 0 ? 1e-6 : 1e-4;

    try {
      const double omega = surface_weight_measure(params, opts.quad_points);
      const double err = std::abs(omega - exact);
      add("sphere_measure", a, omega, "err <= " + num(omega_tol), err <= omega_tol,
          "2 B(1/2, (1+a)/2) = " + num(exact) + ", err " + num(err));
    } catch (const DomainError& e) {
      add("sphere_measure", a, std::nan(""), "err <= " + num(omega_tol), false, e.what());
      continue;
    }
    const auto rule = SphereRule<double>::make(params, opts.quad_points);

    const auto g129 = square_grid(a, 129);
    for (auto [kind, name] : {std::pair{ReferenceKind::Constant, "residual_constant"},
                              std::pair{ReferenceKind::LinearX, "residual_linear_x"}}) {
      const double r = residual_max(sample_reference(kind, g129));
      add(name, a, r, "<= 1e-10", r <= 1e-10);
    }

    {
      std::vector<double> mass;
      for (int nx : {65, 129, 257}) mass.push_back(residual_mass(sample_reference(ReferenceKind::QuadBalance, square_grid(a, nx))));
      const bool exact_zero = mass[0] <= 1e-10 && mass[1] <= 1e-10 && mass[2] <= 1e-10;
      const double order = exact_zero ? std::numeric_limits<double>::infinity() : std::log2(mass[1] / mass[2]);
      const double order0 = exact_zero ? order : std::log2(mass[0] / mass[1]);
      add("quad_balance_order", a, exact_zero ? 0.0 : order, "> 0", exact_zero || (order > 0 && order0 > 0),
          exact_zero ? "L1 residual zero at 65, 129, 257" : "L1 mass " + num(mass[0]) + ", " + num(mass[1]) + ", " + num(mass[2]));
    }

    const auto g257 = square_grid(a, 257);
    {
      const double tol = g257->hx() * g257->hx() + g257->hy() * g257->hy() / (1.0 + a);
      const double gap = mean_value_gap(sample_reference(ReferenceKind::QuadBalance, g257), 0.5, rule);
      add("mean_value_harmonic", a, gap, "|gap| <= " + num(tol), std::abs(gap) <= tol, "x^2 - y^2/(1+a), r = 0.5");
      const auto super = sample_field<double>([](double x, double y) { return -(x * x + y * y); }, g257);
      const double sgap = mean_value_gap(super, 0.5, rule);
      add("mean_value_super", a, sgap, ">= -" + num(tol), sgap >= -tol, "-|X|^2, r = 0.5");
    }

    {
      std::vector<double> ratios;
      for (int nx : {129, 257}) {
        ratios.push_back(harnack_ratio(sample_reference(ReferenceKind::ProfileDerivative, square_grid(a, nx)), -0.5, 0.0, 0.4));
      }
      const double drift = std::abs(ratios[1] / ratios[0] - 1.0);
      add("harnack_stability", a, drift, "<= 0.1", drift <= 0.1,
          "sup/inf on B_0.2(-0.5, 0): " + num(ratios[0]) + " -> " + num(ratios[1]));
    }

    {
      std::mt19937 rng(20240601);
      std::uniform_real_distribution<double> coef(-1.0, 1.0);
      double worst = 0;
      for (int k = 0; k < 20; ++k) {
        double c[8];
        for (double& v : c) v = coef(rng);
        const auto f = sample_field<double>(
            [&](double x, double y) {
              return c[0] * x + c[1] * x * x + c[2] * y * y + c[3] * x * x * x + c[4] * x * y * y +
                     c[5] * std::cos(3 * x) + c[6] * std::sin(2 * x) * (1 + y * y) + c[7] * std::exp(x) * y * y;
            },
            g257);
        if (const auto r = poincare_ratio(f, 0.0, 0.5, rule)) worst = std::max(worst, *r);
      }
      add("poincare", a, worst, "<= 1.1", worst <= 1.1, "max over 20 random fields, r = 0.5");
    }

    {
      struct Case {
        ReferenceKind kind;
        const char* name;
        double k;
        double r_min;
      };
      const Case cases[] = {{ReferenceKind::GlobalProfile, "homogeneity_profile", 1.0 + params.s, 8 * g257->hx()},
                            {ReferenceKind::LinearX, "homogeneity_linear_x", 1.0, 8 * g257->hx()},
                            {ReferenceKind::QuadBalance, "homogeneity_quad_balance", 2.0, 0.1}};
      for (const auto& c : cases) {
        try {
          const auto prof = radial_scan(sample_reference(c.kind, g257), 0.0, c.r_min, 0.25, 24, rule);
          const auto fit = fit_homogeneity(prof, phi(prof, 0.0));
          const double dev = std::max(std::abs(fit.k_from_phi - c.k), std::abs(fit.k_from_slope - c.k));
          add(c.name, a, dev, "<= 0.05", dev <= 0.05,
              "k " + num(fit.k_from_phi) + " (Phi), " + num(fit.k_from_slope) + " (slope) vs " + num(c.k));
        } catch (const DomainError& e) {
          add(c.name, a, std::nan(""), "<= 0.05", false, e.what());
        }
      }
    }

    {
      const auto p = default_problem(a, 257);
      SolverOptions<double> o;
      o.omega = 1.95;
      o.tol = 1e-10;
      const auto sol = solve_obstacle(p, o);
      const auto cs = contact_set(sol, p, sol.feas_tol);
      if (cs.fb_points.empty()) {
        add("divergence_identity", a, std::nan(""), "<= 0.05", false, "no free boundary point");
      } else {
        const auto& fp = cs.fb_points.back();
        const auto tt = to_tilde(sol, p, fp.node);
        const auto di =
            divergence_identity_residual(tt.tilde_u, [&](double x) { return -tt.g_at(x); }, fp.x, 0.25, rule);
        add("divergence_identity", a, di.relative_residual, "<= 0.05", di.relative_residual <= 0.05,
            "default obstacle, 257 x 129, r = 0.25");
      }
    }
  }
  return rows;
}

int verify_command(const VerifyOptions& opts, std::ostream& out) {
  const auto rows = verify_battery(opts);
  bool all = true;
  out << std::left << std::setw(26) << "check" << std::setw(7) << "a" << std::setw(13) << "value" << std::setw(20)
      << "threshold" << std::setw(6) << "pass" << "detail\n";
  for (const auto& r : rows) {
    all = all && r.pass;
    out << std::left << std::setw(26) << r.check << std::setw(7) << r.a << std::setw(13) << num(r.value)
        << std::setw(20) << r.threshold << std::setw(6) << (r.pass ? "yes" : "NO") << r.detail << '\n';
  }
  out << (all ? "all checks passed\n" : "some checks failed\n");
  return all ? kExitOk : kExitCheckFailure;
}

}  // namespace fracobs
