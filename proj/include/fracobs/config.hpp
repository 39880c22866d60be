#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracobs {

/// Configuration error; `line` is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

enum class ObstacleKind { Expression, Csv };
enum class DirichletKind { Zero, ProfileTrace, Csv };

/// Names of the per-run checks, in report order.
inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"complementarity", "classification", "monotonicity", "one_sided",
                                              "decay",           "nondegeneracy",  "cone",         "consistency",
                                              "blowup_trend"};
  return names;
}

struct RunConfig {
  std::filesystem::path source;

  double a{0};
  int n{1};

  double rx{1}, ry{1};
  int nx{257}, ny{129};

  ObstacleKind obstacle{ObstacleKind::Expression};
  std::string obstacle_expression{"0.5 - 2*x^2"};
  std::filesystem::path obstacle_file;

  DirichletKind dirichlet{DirichletKind::Zero};
  std::filesystem::path dirichlet_file;
  double dirichlet_scale{1};
  int dirichlet_orientation{1};

  double omega{1.5};
  double tol{1e-8};
  long max_iter{0};

  /// Frequency radii; r_min <= 0 means 8 h, r_max <= 0 means 0.25 clipped to the grid.
  double r_min{0}, r_max{0};
  int radii_count{24};
  bool calibrate_c0{true};
  double c0{0};
  double monotone_tol{1e-2};
  double class_tol{0.25};
  bool all_points{true};
  std::vector<double> points;
  std::vector<double> blowup_radii{0.2, 0.1, 0.05};
  int quad_points{4096};

  double decay_tol{0.1};
  double nondeg_tol{0.15};
  double consistency_tol{0.2};
  double sign_tol{1e-6};

  std::map<std::string, bool> checks;

  std::filesystem::path output_dir{"out"};

  bool check_enabled(const std::string& name) const {
    const auto it = checks.find(name);
    return it == checks.end() || it->second;
  }
};

/// Parses `[section]` headers and `key = value` lines; `#` and `;` start comments.
/// Relative input files resolve against `base_dir`; the output directory stays relative to the working directory.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace fracobs
