// One line per acceptance criterion; exit status 0 iff every criterion passes.
// Lines tagged "info" report neighbouring cases that the criterion does not gate on.

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fracobs/blowup.hpp"
#include "fracobs/freeboundary.hpp"
#include "fracobs/operator.hpp"
#include "support.hpp"

using namespace fracobs;
using namespace fracobs::testing;

namespace {

const std::vector<double> kA{-0.5, 0.0, 0.5};

struct Outcome {
  bool pass{true};
  std::ostringstream detail;
  void require(bool ok) { pass = pass && ok; }
};

Field<double> sample(ReferenceKind kind, const GridPtr<double>& g) {
  const ReferenceSolution<double> ref(kind, g->params());
  return sample_field<double>([&](double x, double y) { return ref(x, y); }, g);
}

double l1_residual(const Field<double>& f) {
  return apply_la(f).interior_residual.values().abs().sum() * f.grid().hx() * f.grid().hy();
}

/// Weighted L2 norm of u - exact over interior nodes, |y|^a from the row weights.
double weighted_error(const Field<double>& u, const Field<double>& exact) {
  const auto& g = u.grid();
  double sum = 0;
  for (int j = 0; j + 1 < g.ny(); ++j) {
    for (int i = 1; i + 1 < g.nx(); ++i) {
      const double d = u(i, j) - exact(i, j);
      sum += g.x_edge_weight(j) * d * d;
    }
  }
  return std::sqrt(2 * sum * g.hx() * g.hy());
}

struct Scenario {
  ObstacleProblem<double> problem;
  Solution<double> sol;
  ContactSet<double> contact;
};

Scenario solve_parabola(double a, int nx) {
  Scenario s{parabola_problem(a, nx), {}, {}};
  s.sol = solve_obstacle(s.problem, tight());
  s.contact = contact_set(s.sol, s.problem, s.sol.feas_tol);
  return s;
}

Outcome c1_operator() {
  Outcome o;
  o.detail.precision(3);
  for (double a : kA) {
    double lin = 0;
    std::vector<double> mass;
    for (int nx : {65, 129, 257}) {
      const auto g = square_grid(a, nx);
      for (auto k : {ReferenceKind::Constant, ReferenceKind::LinearX}) {
        lin = std::max(lin, apply_la(sample(k, g)).interior_residual.values().abs().maxCoeff());
      }
      mass.push_back(l1_residual(sample(ReferenceKind::QuadBalance, g)));
    }
    o.require(lin <= 1e-10);
    if (mass[0] <= 1e-10 && mass[1] <= 1e-10 && mass[2] <= 1e-10) {
      o.detail << " a=" << a << ": exact";
    } else {
      const double p1 = std::log2(mass[0] / mass[1]);
      const double p2 = std::log2(mass[1] / mass[2]);
      o.require(p1 > 0 && p2 > 0);
      o.detail << " a=" << a << ": orders " << p1 << ", " << p2;
    }
  }
  return o;
}

Outcome c2_oracle() {
  Outcome o;
  const auto p = parabola_problem(0.0, 33);
  const auto psor = solve_obstacle(p, tight(1e-12));
  const auto oracle = oracle_solve(p, 1e-11);
  const double du = (psor.u.values() - oracle.u.values()).abs().maxCoeff();
  const double de = std::abs(discrete_energy(psor.u) - discrete_energy(oracle.u));
  o.require(psor.converged && oracle.converged && du <= 1e-6 && de <= 1e-12);
  o.detail.precision(3);
  o.detail << " max|du| " << du << ", |dE| " << de;
  return o;
}

Outcome c3_manufactured() {
  Outcome o;
  o.detail.precision(3);
  for (double a : kA) {
    std::vector<double> err;
    for (int nx : {129, 257}) {
      const auto p = profile_problem(a, nx);
      const auto s = solve_obstacle(p, tight());
      o.require(s.converged);
      err.push_back(weighted_error(s.u, p.dirichlet));
    }
    o.require(err[1] < err[0]);
    o.detail << " a=" << a << ": " << err[0] << " -> " << err[1];
  }
  return o;
}

Outcome c4_phi_profile() {
  Outcome o;
  o.detail.precision(4);
  for (double a : kA) {
    const auto g = square_grid(a, 257);
    const GlobalProfile<double> prof(g->params());
    const auto f = sample_field<double>([&](double x, double y) { return prof(x, y); }, g);
    const auto rule = SphereRule<double>::make(g->params(), 4096);
    const auto scan = radial_scan(f, 0.0, 8 * g->hx(), 0.25, 24, rule);
    const auto z = phi_at_zero(phi(scan, 0.0));
    o.require(z.stable && std::abs(z.value - 4.0) <= 0.1);
    o.detail << " a=" << a << ": " << z.value;
  }
  return o;
}

struct PointAnalysis {
  FreeBoundaryPoint<double> fp;
  TildeField<double> tilde;
  Classification<double> cls;
};

std::vector<PointAnalysis> analyse(const Scenario& s) {
  const auto& g = *s.problem.grid;
  const auto rule = SphereRule<double>::make(g.params(), 4096);
  std::vector<PointAnalysis> out;
  for (const auto& fp : s.contact.fb_points) {
    auto t = to_tilde(s.sol, s.problem, fp.node);
    auto c = classify_point(t.tilde_u, fp.x, rule, frequency_window(g, fp.x), C0Policy<double>{});
    out.push_back({fp, std::move(t), std::move(c)});
  }
  return out;
}

void c5_c6(const std::vector<Scenario>& scenarios, Outcome& c5, Outcome& c6) {
  c5.detail.precision(3);
  c6.detail.precision(4);
  for (const auto& s : scenarios) {
    const auto& g = *s.problem.grid;
    const double a = g.params().a;
    const auto pts = analyse(s);
    bool regular = !pts.empty();
    double worst = INFINITY, c0 = 0;
    bool mono = !pts.empty();
    for (const auto& p : pts) {
      regular = regular && p.cls.cls == PointClass::Regular;
      worst = std::min(worst, p.cls.worst_dip);
      c0 = std::max(c0, p.cls.C0);
      mono = mono && p.cls.monotone;
      const auto fit = pointwise_decay_fit(p.tilde.tilde_u, p.fp.x, exponent_window(g));
      const bool ok = p.cls.cls == PointClass::Regular && std::abs(fit.exponent - (1 + g.params().s)) <= 0.1;
      c6.require(ok);
      c6.detail << " a=" << a << " x=" << p.fp.x << ": " << fit.exponent << " vs " << 1 + g.params().s;
    }
    c6.require(regular);
    std::ostringstream line;
    line.precision(3);
    line << "a=" << a << ": worst dip " << worst << " at C0 " << c0 << " over [8h, 0.25]";
    c5.require(mono && worst >= -1e-2);
    c5.detail << " " << line.str();
  }
}

Outcome c7_nondegeneracy() {
  Outcome o;
  o.detail.precision(4);
  for (double a : kA) {
    const auto p = profile_problem(a, 257);
    const auto s = solve_obstacle(p, tight());
    const auto cs = contact_set(s, p, s.feas_tol);
    if (cs.fb_points.size() != 1) {
      o.require(false);
      o.detail << " a=" << a << ": expected one free boundary point";
      continue;
    }
    const auto& fp = cs.fb_points.front();
    const auto& g = *p.grid;
    const auto rule = SphereRule<double>::make(g.params(), 4096);
    const auto cls = classify_point(s.u, fp.x, rule, frequency_window(g, fp.x), C0Policy<double>{});
    try {
      const auto nd = nondegeneracy_fit(s.u, s.contact_mask, fp, cls.cls);
      const auto cone = monotone_cone_check(s.u, fp.x, {fp.outward});
      const bool ok = std::abs(nd.fit.exponent - 2 * g.params().s) <= 0.15 && nd.sign_ok && cone.pass;
      o.require(ok);
      o.detail << " a=" << a << ": " << nd.fit.exponent << " vs " << 2 * g.params().s << ", cone min "
               << cone.min_derivative;
    } catch (const DomainError& e) {
      o.require(false);
      o.detail << " a=" << a << ": " << e.what();
    }
  }
  return o;
}

std::vector<double> blowup_distances(const Scenario& s, const PointAnalysis& p) {
  const auto& params = s.problem.grid->params();
  const auto rule = SphereRule<double>::make(params, 4096);
  const auto ref = reference_grid(params);
  const GlobalProfile<double> prof(params);
  const ProfileComparator<double> cmp(ref, prof, 4096);
  std::vector<double> d;
  for (double r : {0.2, 0.1, 0.05}) {
    const double dr = blowup_normalization(p.tilde.tilde_u, p.fp.x, r, rule);
    d.push_back(cmp(rescale(p.tilde.tilde_u, p.fp.x, r, dr, ref)).distance);
  }
  return d;
}

Outcome c8_blowup(std::vector<std::string>& info) {
  Outcome o;
  o.detail.precision(3);
  for (double a : kA) {
    const auto s = solve_parabola(a, 513);
    for (const auto& p : analyse(s)) {
      const auto d = blowup_distances(s, p);
      const bool dec = d[1] < d[0] && d[2] < d[1];
      std::ostringstream line;
      line.precision(3);
      line << "a=" << a << " x=" << p.fp.x << ": " << d[0] << ", " << d[1] << ", " << d[2];
      if (a == 0.0) {
        o.require(p.cls.cls == PointClass::Regular && dec);
        o.detail << " " << line.str();
      } else {
        info.push_back("criterion 8 info " + line.str() + (dec ? " (decreasing)" : " (not decreasing)"));
      }
    }
  }
  return o;
}

Outcome c9_identity(std::vector<std::string>& info) {
  Outcome o;
  o.detail.precision(3);
  for (double a : kA) {
    std::vector<double> res;
    for (int nx : {129, 257}) {
      const auto s = solve_parabola(a, nx);
      const auto& fp = s.contact.fb_points.back();
      const auto t = to_tilde(s.sol, s.problem, fp.node);
      const auto rule = SphereRule<double>::make(s.problem.grid->params(), 4096);
      res.push_back(
          divergence_identity_residual(t.tilde_u, [&](double x) { return -t.g_at(x); }, fp.x, 0.25, rule)
              .relative_residual);
    }
    std::ostringstream line;
    line.precision(3);
    line << "a=" << a << ": " << res[0] << " -> " << res[1];
    if (a == 0.0) {
      o.require(res[1] <= 0.05 && res[1] < res[0]);
      o.detail << " " << line.str();
    } else {
      info.push_back("criterion 9 info " + line.str() + (res[1] <= 0.05 ? " (within 5%)" : " (above 5%)") +
                     (res[1] < res[0] ? ", decreasing" : ", not decreasing"));
    }
  }
  return o;
}

Outcome c10_properties() {
  Outcome o;
  int failed = 0;
  const auto rows = verify_battery(VerifyOptions{});
  for (const auto& r : rows) {
    if (!r.pass) {
      ++failed;
      o.detail << " " << r.check << "@a=" << r.a;
    }
  }
  o.require(failed == 0);
  o.detail << " " << rows.size() - failed << "/" << rows.size() << " rows pass";
  return o;
}

}  // namespace

int main() {
  bool all = true;
  std::vector<std::string> info;
  auto report = [&](int id, const char* name, const Outcome& o) {
    all = all && o.pass;
    std::printf("criterion %2d %-28s %s |%s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
    std::fflush(stdout);
  };

  report(1, "operator residuals", c1_operator());
  report(2, "PSOR vs oracle", c2_oracle());
  report(3, "manufactured profile", c3_manufactured());
  report(4, "Phi(0+) on the profile", c4_phi_profile());

  std::vector<Scenario> scenarios;
  for (double a : kA) scenarios.push_back(solve_parabola(a, 257));
  Outcome c5, c6;
  c5_c6(scenarios, c5, c6);
  report(5, "frequency monotonicity", c5);
  report(6, "optimal decay exponent", c6);
  report(7, "nondegeneracy and cone", c7_nondegeneracy());
  report(8, "blowup trend (513 x 257)", c8_blowup(info));
  report(9, "divergence identity", c9_identity(info));
  report(10, "property suite", c10_properties());

  for (const auto& line : info) std::printf("%s\n", line.c_str());
  std::printf("%s\n", all ? "all criteria pass" : "some criteria fail");
  return all ? 0 : 1;
}
