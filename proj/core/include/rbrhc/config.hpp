#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbrhc/controller.hpp"
#include "rbrhc/scenario.hpp"
#include "rbrhc/sim.hpp"

namespace rbrhc {

/// Fully resolved run configuration. Scenario-dependent fields hold the
/// scenario's defaults unless the config file overrides them.
struct RunConfig {
  /// Builtin scenario name or scenario file path; "inline" when the scenario
  /// is embedded in the config.
  std::string scenario = "exp1_tjunction";
  /// Canonical JSON of an embedded scenario, empty otherwise.
  std::string scenario_inline;
  std::vector<Algorithm> algorithms{Algorithm::kRbRhc, Algorithm::kJccRhc, Algorithm::kPclRhc,
                                    Algorithm::kJccFh};
  double rho0 = 0.01;
  double delta = 0.0;
  int T = 25;
  int N = 25;
  int trials = 100;
  std::uint64_t seed = 1;
  std::string output_dir = "results";
  double s_res = 1.0;
  double v_res = 1.0;
  int disks = 3;
  SimMode mode = SimMode::kGuarantee;
  double mismatch_scale = 2.0;
  int threads = 1;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ParsedConfig {
  RunConfig config;
  Scenario scenario;  ///< with the config's overrides applied
};

/// Parses a JSON run configuration. Unknown keys, syntax errors, missing
/// files and out-of-range values raise ConfigError with the offending field
/// and, where known, its line. `base_dir` resolves relative scenario paths.
ParsedConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");
ParsedConfig parse_config_file(const std::string& path);

/// Config for a builtin scenario with its defaults.
ParsedConfig default_config(const std::string& scenario_name);

/// Canonical JSON (two-space indent, every field present).
std::string emit_config(const RunConfig& config);

/// JSON description of a scenario in the same schema accepted inline.
std::string emit_scenario(const Scenario& scenario);
/// Throws ConfigError on schema violations.
Scenario parse_scenario_text(const std::string& text);

/// Writes config values that override scenario fields into the scenario.
void apply_overrides(const RunConfig& config, Scenario& scenario);

/// Edit distance used for key suggestions.
std::size_t levenshtein(const std::string& a, const std::string& b);

}  // namespace rbrhc
