#include "fracobs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "fracobs/blowup.hpp"
#include "fracobs/expression.hpp"
#include "fracobs/freeboundary.hpp"
#include "fracobs/profile.hpp"

namespace fracobs {

using json = nlohmann::ordered_json;

namespace {

using Row = ObstacleProblem<double>::Row;

Row read_obstacle_csv(const std::filesystem::path& path, const Grid<double>& g) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open obstacle file " + path.string(), 0);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("obstacle file is empty", 0);
  Row phi(g.nx());
  int count = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string xs, vs;
    if (!std::getline(ss, xs, ',') || !std::getline(ss, vs)) {
      throw ConfigError(path.filename().string() + ":" + std::to_string(lineno) + ": expected 'x,phi'", 0);
    }
    if (count >= g.nx()) throw ConfigError("obstacle file has more rows than grid nodes", 0);
    const double x = std::stod(xs);
    if (std::abs(x - g.x(count)) > 1e-9 * g.hx() + 1e-12) {
      throw ConfigError(path.filename().string() + ":" + std::to_string(lineno) + ": x does not match grid node " +
                            std::to_string(count),
                        0);
    }
    phi[count++] = std::stod(vs);
  }
  if (count != g.nx()) throw ConfigError("obstacle file needs one row per thin node", 0);
  return phi;
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

json window_json(const FitWindow<double>& w) { return json::array({w.lo, w.hi}); }

json config_json(const RunConfig& cfg) {
  json c;
  c["source"] = cfg.source.filename().string();
  c["params"] = {{"a", cfg.a}, {"n", cfg.n}};
  c["grid"] = {{"rx", cfg.rx}, {"ry", cfg.ry}, {"nx", cfg.nx}, {"ny", cfg.ny}};
  if (cfg.obstacle == ObstacleKind::Expression) {
    c["obstacle"] = {{"kind", "expression"}, {"expression", cfg.obstacle_expression}};
  } else {
    c["obstacle"] = {{"kind", "csv"}, {"file", cfg.obstacle_file.filename().string()}};
  }
  const char* dk = cfg.dirichlet == DirichletKind::Zero ? "zero"
                   : cfg.dirichlet == DirichletKind::ProfileTrace ? "profile-trace"
                                                                  : "csv";
  c["dirichlet"] = {{"kind", dk}, {"scale", cfg.dirichlet_scale}, {"orientation", cfg.dirichlet_orientation}};
  c["solver"] = {{"omega", cfg.omega}, {"tol", cfg.tol}, {"max_iter", cfg.max_iter}};
  json an;
  an["c0"] = cfg.calibrate_c0 ? json("calibrate") : json(cfg.c0);
  an["monotone_tol"] = cfg.monotone_tol;
  an["class_tol"] = cfg.class_tol;
  an["points"] = cfg.all_points ? json("all-fb") : json(cfg.points);
  an["blowup_radii"] = cfg.blowup_radii;
  an["quad_points"] = cfg.quad_points;
  an["radii_count"] = cfg.radii_count;
  c["analysis"] = an;
  json checks = json::object();
  for (const auto& name : check_names()) checks[name] = cfg.check_enabled(name);
  c["checks"] = checks;
  return c;
}

void write_frequency_csv(const Classification<double>& c, const std::filesystem::path& path) {
  std::ofstream os(path);
  os << std::setprecision(17);
  os << "r,F,D,G,H,d_r,phi,branch\n";
  const auto& p = c.profile;
  for (std::size_t k = 0; k < p.radii.size(); ++k) {
    os << p.radii[k] << ',' << p.F[k] << ',' << p.D[k] << ',' << p.G[k] << ',' << p.H[k] << ',' << p.d_r[k] << ','
       << c.series.phi[k] << ',' << (c.series.f_branch[k] ? "F" : "comparison") << '\n';
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream os(path);
  os << j.dump(2) << '\n';
}

struct CheckLog {
  json entries = json::array();
  json failures = json::array();

  void add(const RunConfig& cfg, const std::string& name, int point, bool pass, const std::string& detail) {
    if (!cfg.check_enabled(name)) return;
    json e;
    e["check"] = name;
    e["point"] = point < 0 ? json(nullptr) : json(point);
    e["pass"] = pass;
    e["detail"] = detail;
    entries.push_back(e);
    if (!pass) failures.push_back(point < 0 ? name : name + "@" + std::to_string(point));
  }
};

/// Contact run on the contact side and free run on the other side, each at least `len` nodes.
bool one_sided(const std::vector<unsigned char>& mask, const FreeBoundaryPoint<double>& p, int len) {
  const int n = static_cast<int>(mask.size());
  for (int k = 0; k < len; ++k) {
    const int in = p.node - p.outward * k;
    const int out = p.node + p.outward * (k + 1);
    if (in < 0 || in >= n || out < 0 || out >= n) return false;
    if (!mask[in] || mask[out]) return false;
  }
  return true;
}

json analyse_point(const RunConfig& cfg, const ObstacleProblem<double>& problem, const Solution<double>& sol,
                   const FreeBoundaryPoint<double>& fp, int index, const SphereRule<double>& rule,
                   const ProfileComparator<double>& comparator, const GridPtr<double>& ref,
                   const std::filesystem::path& out_dir, CheckLog& checks) {
  const Grid<double>& g = *problem.grid;
  const WeightParams<double>& params = g.params();
  json pj;
  pj["index"] = index;
  pj["x"] = fp.x;
  pj["node"] = fp.node;
  pj["node_x"] = g.x(fp.node);
  pj["outward"] = fp.outward;

  const bool sided = one_sided(sol.contact_mask, fp, 8);
  pj["one_sided_8"] = sided;

  const TildeField<double> tilde = to_tilde(sol, problem, fp.node);
  pj["tilde"] = {{"laplacian_at_center", tilde.laplacian_at_center},
                 {"la_bound_constant", tilde.la_bound_constant},
                 {"g_lipschitz", tilde.g_lipschitz}};

  FitWindow<double> fw = frequency_window(g, fp.x);
  if (cfg.r_min > 0) fw.lo = cfg.r_min;
  if (cfg.r_max > 0) fw.hi = cfg.r_max;
  C0Policy<double> policy;
  policy.calibrate = cfg.calibrate_c0;
  policy.fixed = cfg.c0;
  policy.tol = cfg.monotone_tol;
  const Classification<double> cl =
      classify_point(tilde.tilde_u, fp.x, rule, fw, policy, cfg.class_tol, cfg.radii_count);
  write_frequency_csv(cl, out_dir / ("frequency_" + std::to_string(index) + ".csv"));

  pj["classification"] = {{"class", to_string(cl.cls)},
                          {"phi0", cl.phi0},
                          {"phi0_spread", cl.phi0_spread},
                          {"phi0_stable", cl.phi0_stable},
                          {"phi0_guard", 0.1},
                          {"regular_value", params.regular_frequency()},
                          {"singular_floor", params.singular_frequency()},
                          {"class_tol", cl.class_tol},
                          {"window", window_json(cl.window)},
                          {"radii_count", cfg.radii_count}};
  pj["frequency"] = {{"C0", cl.C0},
                     {"C0_policy", cfg.calibrate_c0 ? "calibrate" : "fixed"},
                     {"monotone_pass", cl.monotone},
                     {"worst_dip", cl.worst_dip},
                     {"monotone_up_to", cl.monotone_up_to},
                     {"monotone_tol", cfg.monotone_tol},
                     {"phi_at_rmin", cl.series.phi.front()},
                     {"csv", "frequency_" + std::to_string(index) + ".csv"}};

  const bool regular = cl.cls == PointClass::Regular;
  checks.add(cfg, "classification", index, cl.cls != PointClass::Unresolved,
             std::string(to_string(cl.cls)) + ", phi0 = " + fmt(cl.phi0));
  checks.add(cfg, "monotonicity", index, cl.monotone, "worst dip " + fmt(cl.worst_dip) + " at C0 = " + fmt(cl.C0));
  if (regular) checks.add(cfg, "one_sided", index, sided, sided ? "contact run >= 8 nodes" : "contact not one-sided");

  const FitWindow<double> ew = exponent_window(g);
  double decay = std::nan("");
  try {
    const auto fit = pointwise_decay_fit(tilde.tilde_u, fp.x, ew);
    decay = fit.exponent;
    pj["decay"] = {{"exponent", fit.exponent},
                   {"expected", 1.0 + params.s},
                   {"tolerance", cfg.decay_tol},
                   {"window", window_json(fit.window)},
                   {"samples", static_cast<int>(fit.abscissae.size())}};
    if (regular) {
      const bool ok = std::abs(fit.exponent - (1.0 + params.s)) <= cfg.decay_tol;
      checks.add(cfg, "decay", index, ok, "exponent " + fmt(fit.exponent) + " vs 1+s = " + fmt(1.0 + params.s));
    }
  } catch (const std::exception& e) {
    pj["decay"] = {{"error", e.what()}};
    checks.add(cfg, "decay", index, false, e.what());
  }

  if (regular) {
    try {
      const auto nd = nondegeneracy_fit(tilde.tilde_u, sol.contact_mask, fp, cl.cls, 0.25, cfg.sign_tol);
      pj["nondegeneracy"] = {{"exponent", nd.fit.exponent},
                             {"expected", 2.0 * params.s},
                             {"tolerance", cfg.nondeg_tol},
                             {"ray_x", nd.ray_x},
                             {"window", window_json(nd.fit.window)},
                             {"samples", static_cast<int>(nd.fit.abscissae.size())},
                             {"min_value", nd.min_value},
                             {"min_at", json::array({nd.min_x, nd.min_y})},
                             {"sign_radius", 0.125},
                             {"sign_tol", cfg.sign_tol},
                             {"sign_ok", nd.sign_ok}};
      const bool ok = std::abs(nd.fit.exponent - 2.0 * params.s) <= cfg.nondeg_tol && nd.sign_ok;
      checks.add(cfg, "nondegeneracy", index, ok,
                 "exponent " + fmt(nd.fit.exponent) + " vs 2s = " + fmt(2.0 * params.s) + ", min u_tau " +
                     fmt(nd.min_value));
      if (std::isfinite(decay)) {
        const double diff = decay - nd.fit.exponent;
        const double expected = 1.0 - params.s;
        pj["consistency"] = {{"difference", diff}, {"expected", expected}, {"tolerance", cfg.consistency_tol}};
        checks.add(cfg, "consistency", index, std::abs(diff - expected) <= cfg.consistency_tol,
                   "decay - nondeg = " + fmt(diff) + " vs 1-s = " + fmt(expected));
      }
    } catch (const std::exception& e) {
      pj["nondegeneracy"] = {{"error", e.what()}};
      checks.add(cfg, "nondegeneracy", index, false, e.what());
    }

    const auto cone = monotone_cone_check(tilde.tilde_u, fp.x, {fp.outward}, 0.125, cfg.sign_tol);
    pj["cone"] = {{"directions", json::array({fp.outward})},
                  {"min_derivative", cone.min_derivative},
                  {"min_at", json::array({cone.min_x, cone.min_y})},
                  {"radius", 0.125},
                  {"tol", cfg.sign_tol},
                  {"pass", cone.pass}};
    checks.add(cfg, "cone", index, cone.pass, "min D_tau u = " + fmt(cone.min_derivative));
  }

  json hom = nullptr;
  if (cl.phi0_stable) {
    try {
      const auto fit = fit_homogeneity(cl.profile, cl.series);
      hom = {{"k_from_phi", fit.k_from_phi},
             {"k_from_slope", fit.k_from_slope},
             {"slope_window", json::array({fit.window_lo, fit.window_hi})}};
    } catch (const DomainError&) {
    }
  }
  pj["homogeneity"] = hom;

  json blowups = json::array();
  std::vector<double> radii = cfg.blowup_radii;
  std::sort(radii.begin(), radii.end(), std::greater<>());
  std::vector<double> distances;
  std::string blowup_error;
  for (double r : radii) {
    json b;
    b["r"] = r;
    try {
      const double d_r = blowup_normalization(tilde.tilde_u, fp.x, r, rule);
      const auto pd = comparator(rescale(tilde.tilde_u, fp.x, r, d_r, ref));
      b["d_r"] = d_r;
      b["distance"] = pd.distance;
      b["orientation"] = pd.orientation;
      b["distance_other_orientation"] = pd.distance_other;
      b["k_from_phi"] = hom.is_null() ? json(nullptr) : hom["k_from_phi"];
      b["k_from_slope"] = hom.is_null() ? json(nullptr) : hom["k_from_slope"];
      distances.push_back(pd.distance);
    } catch (const std::exception& e) {
      b["error"] = e.what();
      blowup_error = e.what();
    }
    blowups.push_back(b);
  }
  pj["blowups"] = blowups;
  pj["blowup_region"] = "weighted L2 on B_1/2 of the reference grid";
  if (regular) {
    bool decreasing = blowup_error.empty() && distances.size() == radii.size();
    for (std::size_t k = 1; decreasing && k < distances.size(); ++k) decreasing = distances[k] < distances[k - 1];
    std::string detail = blowup_error.empty() ? "distances" : blowup_error;
    if (blowup_error.empty()) {
      for (double d : distances) detail += " " + fmt(d, 4);
    }
    checks.add(cfg, "blowup_trend", index, decreasing, detail);
  }
  return pj;
}

}  // namespace

ObstacleProblem<double> build_problem(const RunConfig& cfg) {
  const auto params = WeightParams<double>::make(cfg.a, cfg.n);
  const auto grid = build_grid(GridSpec<double>{cfg.rx, cfg.ry, cfg.nx, cfg.ny, params});
  ObstacleProblem<double> p{grid, Row(grid->nx()), Field<double>(grid), std::nullopt};
  if (cfg.obstacle == ObstacleKind::Expression) {
    const Expression e = Expression::parse(cfg.obstacle_expression);
    Row lap(grid->nx());
    for (int i = 0; i < grid->nx(); ++i) {
      const Jet j = e.jet(grid->x(i));
      if (!std::isfinite(j.v) || !std::isfinite(j.d2)) {
        throw DomainError("obstacle expression is not finite at x = " + fmt(grid->x(i)));
      }
      p.phi[i] = j.v;
      lap[i] = j.d2;
    }
    p.laplacian_phi = lap;
  } else {
    p.phi = read_obstacle_csv(cfg.obstacle_file, *grid);
  }
  switch (cfg.dirichlet) {
    case DirichletKind::Zero:
      break;
    case DirichletKind::ProfileTrace: {
      const GlobalProfile<double> prof(params);
      const double o = cfg.dirichlet_orientation;
      const double c = cfg.dirichlet_scale;
      p.dirichlet = sample_field<double>([&](double x, double y) { return c * prof(o * x, y); }, grid);
      break;
    }
    case DirichletKind::Csv: {
      std::ifstream in(cfg.dirichlet_file);
      p.dirichlet = read_field_csv(in, grid);
      break;
    }
  }
  p.validate();
  return p;
}

std::filesystem::path resolve_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return std::filesystem::path(env);
  return cfg.output_dir;
}

int run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
  ObstacleProblem<double> problem;
  try {
    problem = build_problem(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid problem: ") + e.what(), 0);
  }
  std::filesystem::create_directories(out_dir);
  const Grid<double>& g = *problem.grid;

  SolverOptions<double> opts;
  opts.omega = cfg.omega;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  const Solution<double> sol = solve_obstacle(problem, opts);
  write_field_csv(sol.u, (out_dir / "solution.csv").string());
  log << "solve: " << sol.iterations << " sweeps, residual " << (sol.residuals.empty() ? 0.0 : sol.residuals.back())
      << (sol.converged ? "" : " (not converged)") << '\n';

  json report;
  report["config"] = config_json(cfg);
  json sj;
  sj["iterations"] = sol.iterations;
  sj["converged"] = sol.converged;
  sj["tol"] = sol.tol;
  sj["feas_tol"] = sol.feas_tol;
  sj["ordering"] = sol.ordering;
  sj["final_residual"] = sol.residuals.empty() ? json(nullptr) : json(sol.residuals.back());
  sj["residuals"] = sol.residuals;
  sj["csv"] = "solution.csv";
  report["solver"] = sj;

  if (!sol.converged) {
    report["status"] = "nonconvergence";
    report["failures"] = json::array({"solver"});
    write_json(report, out_dir / "report.json");
    log << "solver did not reach tol " << cfg.tol << " within the sweep cap\n";
    return kExitNonConvergence;
  }

  CheckLog checks;
  const auto comp = complementarity_report(sol, problem);
  report["complementarity"] = {{"max_feasibility_violation", comp.max_feasibility_violation},
                               {"feasibility_node", comp.feasibility_node},
                               {"min_reaction", comp.min_reaction},
                               {"min_boundary_flux", comp.min_boundary_flux},
                               {"max_complementarity", comp.max_complementarity},
                               {"max_complementarity_product", comp.max_complementarity_product},
                               {"contact_size", comp.contact_size},
                               {"feas_tol", comp.feas_tol},
                               {"flux_tol", comp.flux_tol},
                               {"comp_tol", comp.comp_tol},
                               {"pass", comp.ok()}};
  checks.add(cfg, "complementarity", -1, comp.ok(),
             "feasibility " + fmt(comp.max_feasibility_violation) + ", min reaction " + fmt(comp.min_reaction) +
                 ", complementarity " + fmt(comp.max_complementarity));

  const auto cs = contact_set(sol, problem, sol.feas_tol);
  json contact;
  contact["size"] = static_cast<int>(cs.contact_nodes.size());
  if (!cs.contact_nodes.empty()) {
    contact["interval"] = json::array({g.x(cs.contact_nodes.front()), g.x(cs.contact_nodes.back())});
  } else {
    contact["interval"] = nullptr;
  }
  json fbs = json::array();
  for (const auto& p : cs.fb_points) fbs.push_back({{"x", p.x}, {"node", p.node}, {"outward", p.outward}});
  contact["free_boundary_points"] = fbs;
  contact["feas_tol"] = cs.feas_tol;
  contact["location"] = "power-law interpolation of (u - phi - feas_tol) at the first two free nodes";
  report["contact"] = contact;

  std::vector<FreeBoundaryPoint<double>> chosen;
  if (cfg.all_points) {
    chosen = cs.fb_points;
  } else {
    for (double x : cfg.points) {
      const FreeBoundaryPoint<double>* best = nullptr;
      for (const auto& p : cs.fb_points) {
        if (!best || std::abs(p.x - x) < std::abs(best->x - x)) best = &p;
      }
      if (best && std::abs(best->x - x) <= 2.0 * g.hx()) {
        chosen.push_back(*best);
      } else {
        checks.entries.push_back({{"check", "point_lookup"}, {"point", nullptr}, {"pass", false},
                                  {"detail", "no free boundary point within 2 hx of x = " + fmt(x)}});
        checks.failures.push_back("point_lookup");
      }
    }
  }

  const auto rule = SphereRule<double>::make(g.params(), cfg.quad_points);
  const auto ref = reference_grid(g.params());
  const GlobalProfile<double> profile(g.params());
  const ProfileComparator<double> comparator(ref, profile, cfg.quad_points);

  json points = json::array();
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    try {
      points.push_back(analyse_point(cfg, problem, sol, chosen[k], static_cast<int>(k), rule, comparator, ref,
                                     out_dir, checks));
    } catch (const std::exception& e) {
      points.push_back({{"index", static_cast<int>(k)}, {"x", chosen[k].x}, {"error", e.what()}});
      checks.entries.push_back(
          {{"check", "analysis"}, {"point", static_cast<int>(k)}, {"pass", false}, {"detail", e.what()}});
      checks.failures.push_back("analysis@" + std::to_string(k));
    }
  }
  report["points"] = points;
  report["checks"] = checks.entries;
  report["failures"] = checks.failures;
  const bool ok = checks.failures.empty();
  report["status"] = ok ? "ok" : "check_failure";
  write_json(report, out_dir / "report.json");

  for (const auto& p : points) {
    if (p.contains("classification")) {
      log << "point " << p["index"].get<int>() << " x = " << p["x"].get<double>() << ": "
          << p["classification"]["class"].get<std::string>() << ", phi0 = " << p["classification"]["phi0"].get<double>()
          << '\n';
    }
  }
  for (const auto& f : checks.failures) log << "check failed: " << f.get<std::string>() << '\n';
  return ok ? kExitOk : kExitCheckFailure;
}

int run_command(const std::filesystem::path& config_path, std::ostream& log) {
  try {
    const RunConfig cfg = load_config(config_path);
    return run_pipeline(cfg, resolve_output_dir(cfg), log);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int sweep_command(const std::filesystem::path& config_path, const std::vector<double>& a_values, std::ostream& log) {
  RunConfig base;
  try {
    base = load_config(config_path);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (a_values.empty()) {
    log << "config error: sweep needs at least one value of a\n";
    return kExitConfig;
  }
  const std::filesystem::path root = resolve_output_dir(base);
  std::filesystem::create_directories(root);
  json merged;
  merged["config"] = base.source.filename().string();
  json runs = json::array();
  int worst = kExitOk;
  for (double a : a_values) {
    RunConfig cfg = base;
    cfg.a = a;
    std::ostringstream name;
    name << "a_" << a;
    const std::filesystem::path dir = root / name.str();
    json entry;
    entry["a"] = a;
    entry["directory"] = name.str();
    int code = kExitOk;
    try {
      if (!(a > -1.0 && a < 1.0)) throw ConfigError("a must lie in the open interval (-1, 1)", 0);
      if (!(cfg.class_tol <= (1.0 + a) / 2.0)) throw ConfigError("class_tol exceeds (1 + a)/2", 0);
      log << "== a = " << a << '\n';
      code = run_pipeline(cfg, dir, log);
      std::ifstream in(dir / "report.json");
      entry["report"] = json::parse(in);
    } catch (const ConfigError& e) {
      code = kExitConfig;
      entry["error"] = e.what();
      log << "config error: " << e.what() << '\n';
    }
    entry["exit_code"] = code;
    runs.push_back(entry);
    worst = std::max(worst, code);
  }
  merged["runs"] = runs;
  write_json(merged, root / "sweep.json");
  return worst;
}

}  // namespace fracobs
