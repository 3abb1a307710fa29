#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rbrhc/commands.hpp"
#include "rbrhc/errors.hpp"

namespace {

std::vector<rbrhc::Algorithm> parse_algorithm_list(const std::string& text) {
  std::vector<rbrhc::Algorithm> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto alg = rbrhc::parse_algorithm(item);
    if (!alg) {
      throw rbrhc::ConfigError(rbrhc::ConfigError::Kind::kValidation, "algorithms", 0,
                               "unknown algorithm '" + item + "'");
    }
    out.push_back(*alg);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-budgeted receding horizon planning: simulation and verification"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run paired Monte Carlo trials and write results");
  std::string config;
  std::string scenario;
  std::string algorithms;
  int trials = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
  auto* config_opt = run->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
  auto* scenario_opt = run->add_option("--scenario", scenario, "builtin scenario with default settings");
  config_opt->excludes(scenario_opt);
  run->add_option("--algorithms", algorithms, "comma-separated: rb-rhc,jcc-rhc,pcl-rhc,jcc-fh");
  run->add_option("--trials", trials, "number of paired trials")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "base seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Run the oracle checks");
  auto* scenarios = app.add_subcommand("scenarios", "Scenario utilities");
  auto* list = scenarios->add_subcommand("list", "List builtin scenarios");
  scenarios->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? rbrhc::kExitOk : rbrhc::kExitConfigError;
  }

  if (*run) {
    rbrhc::RunSource source{config, scenario};
    rbrhc::RunOverrides ov;
    try {
      if (!algorithms.empty()) ov.algorithms = parse_algorithm_list(algorithms);
    } catch (const rbrhc::ConfigError& e) {
      std::cerr << rbrhc::config_error_json(e) << "\n";
      return rbrhc::kExitConfigError;
    }
    if (run->count("--trials")) ov.trials = trials;
    if (run->count("--seed")) ov.seed = seed;
    if (run->count("--out")) ov.out_dir = out_dir;
    if (run->count("--threads")) ov.threads = threads;
    return rbrhc::cmd_run(source, ov, std::cout, std::cerr);
  }
  if (*verify) return rbrhc::cmd_verify({}, std::cout);
  if (*list) return rbrhc::cmd_scenarios_list(std::cout);
  return rbrhc::kExitFailure;
}
