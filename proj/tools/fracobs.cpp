#include <iostream>

#include <CLI11.hpp>

#include "fracobs/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Thin obstacle problem for div(|y|^a grad u): solve, classify free boundary points, check blowups"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Solve and analyse the scenario in a config file");
  run->add_option("config", run_config, "INI config")->required();

  fracobs::VerifyOptions vopts;
  auto* verify = app.add_subcommand("verify", "Property battery for the operator, quadrature and frequency tools");
  verify->add_option("--quad-points", vopts.quad_points, "Points in the weighted sphere rule");
  verify->add_option("--a", vopts.a_values, "Weight exponents to test")->delimiter(',');

  std::string sweep_config;
  std::vector<double> sweep_a;
  auto* sweep = app.add_subcommand("sweep", "Repeat a run for several values of a");
  sweep->add_option("--a", sweep_a, "Comma-separated weight exponents")->required()->delimiter(',');
  sweep->add_option("config", sweep_config, "INI config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fracobs::kExitConfig;
  }

  if (*run) return fracobs::run_command(run_config, std::cerr);
  if (*sweep) return fracobs::sweep_command(sweep_config, sweep_a, std::cerr);
  if (*verify) {
    try {
      return fracobs::verify_command(vopts, std::cout);
    } catch (const std::exception& e) {
      std::cerr << "verify: " << e.what() << '\n';
      return fracobs::kExitConfig;
    }
  }
  return fracobs::kExitConfig;
}
