#include "fracobs/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include "fracobs/expression.hpp"

namespace fracobs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double to_double(const std::string& v, int line) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'", line);
  }
  if (used != v.size()) throw ConfigError("expected a number, got '" + v + "'", line);
  return out;
}

long to_long(const std::string& v, int line) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + v + "'", line);
  }
  if (used != v.size()) throw ConfigError("expected an integer, got '" + v + "'", line);
  return out;
}

bool to_bool(const std::string& v, int line) {
  const std::string l = lower(v);
  if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
  if (l == "false" || l == "no" || l == "off" || l == "0") return false;
  throw ConfigError("expected a boolean, got '" + v + "'", line);
}

std::vector<double> to_list(const std::string& v, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, line));
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list of numbers", line);
  return out;
}

struct Entry {
  std::string value;
  int line{0};
};

}  // namespace

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("unterminated section header", line);
      section = lower(trim(text.substr(1, text.size() - 2)));
      if (section.empty()) throw ConfigError("empty section name", line);
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    if (section.empty()) throw ConfigError("key outside of any [section]", line);
    const std::string key = lower(trim(text.substr(0, eq)));
    if (key.empty()) throw ConfigError("empty key", line);
    const std::string full = section + "." + key;
    if (entries.count(full)) throw ConfigError("duplicate key '" + full + "'", line);
    entries[full] = Entry{trim(text.substr(eq + 1)), line};
  }

  RunConfig cfg;
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };

  using Setter = std::function<void(const Entry&)>;
  const std::map<std::string, Setter> setters{
      {"params.a", [&](const Entry& e) { cfg.a = to_double(e.value, e.line); }},
      {"params.n", [&](const Entry& e) { cfg.n = static_cast<int>(to_long(e.value, e.line)); }},
      {"grid.rx", [&](const Entry& e) { cfg.rx = to_double(e.value, e.line); }},
      {"grid.ry", [&](const Entry& e) { cfg.ry = to_double(e.value, e.line); }},
      {"grid.nx", [&](const Entry& e) { cfg.nx = static_cast<int>(to_long(e.value, e.line)); }},
      {"grid.ny", [&](const Entry& e) { cfg.ny = static_cast<int>(to_long(e.value, e.line)); }},
      {"obstacle.kind",
       [&](const Entry& e) {
         const std::string v = lower(e.value);
         if (v == "expression") cfg.obstacle = ObstacleKind::Expression;
         else if (v == "csv") cfg.obstacle = ObstacleKind::Csv;
         else throw ConfigError("obstacle kind must be 'expression' or 'csv'", e.line);
       }},
      {"obstacle.expression", [&](const Entry& e) { cfg.obstacle_expression = e.value; }},
      {"obstacle.file", [&](const Entry& e) { cfg.obstacle_file = path_of(e.value); }},
      {"dirichlet.kind",
       [&](const Entry& e) {
         const std::string v = lower(e.value);
         if (v == "zero") cfg.dirichlet = DirichletKind::Zero;
         else if (v == "profile-trace") cfg.dirichlet = DirichletKind::ProfileTrace;
         else if (v == "csv") cfg.dirichlet = DirichletKind::Csv;
         else throw ConfigError("dirichlet kind must be 'zero', 'profile-trace' or 'csv'", e.line);
       }},
      {"dirichlet.file", [&](const Entry& e) { cfg.dirichlet_file = path_of(e.value); }},
      {"dirichlet.scale", [&](const Entry& e) { cfg.dirichlet_scale = to_double(e.value, e.line); }},
      {"dirichlet.orientation",
       [&](const Entry& e) {
         const long o = to_long(e.value, e.line);
         if (o != 1 && o != -1) throw ConfigError("orientation must be 1 or -1", e.line);
         cfg.dirichlet_orientation = static_cast<int>(o);
       }},
      {"solver.omega", [&](const Entry& e) { cfg.omega = to_double(e.value, e.line); }},
      {"solver.tol", [&](const Entry& e) { cfg.tol = to_double(e.value, e.line); }},
      {"solver.max_iter", [&](const Entry& e) { cfg.max_iter = to_long(e.value, e.line); }},
      {"analysis.r_min", [&](const Entry& e) { cfg.r_min = to_double(e.value, e.line); }},
      {"analysis.r_max", [&](const Entry& e) { cfg.r_max = to_double(e.value, e.line); }},
      {"analysis.radii_count", [&](const Entry& e) { cfg.radii_count = static_cast<int>(to_long(e.value, e.line)); }},
      {"analysis.c0",
       [&](const Entry& e) {
         if (lower(e.value) == "calibrate") {
           cfg.calibrate_c0 = true;
         } else {
           cfg.calibrate_c0 = false;
           cfg.c0 = to_double(e.value, e.line);
         }
       }},
      {"analysis.monotone_tol", [&](const Entry& e) { cfg.monotone_tol = to_double(e.value, e.line); }},
      {"analysis.class_tol", [&](const Entry& e) { cfg.class_tol = to_double(e.value, e.line); }},
      {"analysis.points",
       [&](const Entry& e) {
         if (lower(e.value) == "all-fb") {
           cfg.all_points = true;
         } else {
           cfg.all_points = false;
           cfg.points = to_list(e.value, e.line);
         }
       }},
      {"analysis.blowup_radii", [&](const Entry& e) { cfg.blowup_radii = to_list(e.value, e.line); }},
      {"analysis.quad_points", [&](const Entry& e) { cfg.quad_points = static_cast<int>(to_long(e.value, e.line)); }},
      {"analysis.decay_tol", [&](const Entry& e) { cfg.decay_tol = to_double(e.value, e.line); }},
      {"analysis.nondeg_tol", [&](const Entry& e) { cfg.nondeg_tol = to_double(e.value, e.line); }},
      {"analysis.consistency_tol", [&](const Entry& e) { cfg.consistency_tol = to_double(e.value, e.line); }},
      {"analysis.sign_tol", [&](const Entry& e) { cfg.sign_tol = to_double(e.value, e.line); }},
      {"output.directory", [&](const Entry& e) { cfg.output_dir = e.value; }},
  };

  for (const auto& [key, entry] : entries) {
    if (key.rfind("checks.", 0) == 0) {
      const std::string name = key.substr(7);
      const auto& names = check_names();
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw ConfigError("unknown check '" + name + "'", entry.line);
      }
      cfg.checks[name] = to_bool(entry.value, entry.line);
      continue;
    }
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key '" + key + "'", entry.line);
    it->second(entry);
  }

  auto line_of = [&](const std::string& key) {
    const auto it = entries.find(key);
    return it == entries.end() ? 0 : it->second.line;
  };

  if (!(cfg.a > -1.0 && cfg.a < 1.0)) throw ConfigError("a must lie in the open interval (-1, 1)", line_of("params.a"));
  if (cfg.n != 1) throw ConfigError("only n = 1 is supported", line_of("params.n"));
  if (!(cfg.rx > 0) || !(cfg.ry > 0)) throw ConfigError("rx and ry must be positive", line_of("grid.rx"));
  if (cfg.nx < 9 || cfg.nx % 2 == 0) throw ConfigError("nx must be odd and at least 9", line_of("grid.nx"));
  if (cfg.ny < 5) throw ConfigError("ny must be at least 5", line_of("grid.ny"));
  if (!(cfg.omega > 0 && cfg.omega < 2)) throw ConfigError("omega must lie in (0, 2)", line_of("solver.omega"));
  if (!(cfg.tol > 0)) throw ConfigError("tol must be positive", line_of("solver.tol"));
  if (cfg.max_iter < 0) throw ConfigError("max_iter must be non-negative", line_of("solver.max_iter"));
  if (cfg.radii_count < 16) throw ConfigError("radii_count must be at least 16", line_of("analysis.radii_count"));
  if (cfg.quad_points < 16 || cfg.quad_points % 4 != 0) {
    throw ConfigError("quad_points must be a multiple of 4 and at least 16", line_of("analysis.quad_points"));
  }
  if (cfg.blowup_radii.size() < 2) throw ConfigError("need at least two blowup radii", line_of("analysis.blowup_radii"));
  for (double r : cfg.blowup_radii) {
    if (!(r > 0)) throw ConfigError("blowup radii must be positive", line_of("analysis.blowup_radii"));
  }
  const double half_gap = (1.0 + cfg.a) / 2.0;
  if (!(cfg.class_tol > 0) || !(cfg.class_tol <= half_gap)) {
    const int l = line_of("analysis.class_tol");
    throw ConfigError("class_tol must lie in (0, (1 + a)/2] = (0, " + std::to_string(half_gap) + "]",
                      l ? l : line_of("params.a"));
  }
  if (cfg.obstacle == ObstacleKind::Expression) {
    try {
      (void)Expression::parse(cfg.obstacle_expression);
    } catch (const ExpressionError& err) {
      throw ConfigError(std::string("obstacle expression: ") + err.what(), line_of("obstacle.expression"));
    }
  } else {
    if (cfg.obstacle_file.empty()) throw ConfigError("csv obstacle needs a file", line_of("obstacle.kind"));
    if (!std::filesystem::exists(cfg.obstacle_file)) {
      throw ConfigError("obstacle file not found: " + cfg.obstacle_file.string(), line_of("obstacle.file"));
    }
  }
  if (cfg.dirichlet == DirichletKind::Csv) {
    if (cfg.dirichlet_file.empty()) throw ConfigError("csv dirichlet data need a file", line_of("dirichlet.kind"));
    if (!std::filesystem::exists(cfg.dirichlet_file)) {
      throw ConfigError("dirichlet file not found: " + cfg.dirichlet_file.string(), line_of("dirichlet.file"));
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string(), 0);
  RunConfig cfg = parse_config(in, path.parent_path());
  cfg.source = path;
  return cfg;
}

}  // namespace fracobs
