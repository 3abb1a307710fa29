#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rbrhc/config.hpp"
#include "rbrhc/errors.hpp"
#include "rbrhc/verify.hpp"

namespace rbrhc {

/// Process exit statuses of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutDirEnv = "RBRHC_OUT_DIR";

/// Command-line values that take precedence over the config file.
struct RunOverrides {
  std::optional<std::vector<Algorithm>> algorithms;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

/// Source of a run: a config file or a builtin scenario with its defaults.
struct RunSource {
  std::string config_path;
  std::string builtin;
};

/// Parses, runs the Monte Carlo trials and writes trials.csv,
/// budget_trace_<algorithm>.csv, summary.json and manifest.json. Config
/// errors print a JSON object on `err` and return kExitConfigError.
int cmd_run(const RunSource& source, const RunOverrides& overrides, std::ostream& out,
            std::ostream& err);

/// Runs the oracle checks and prints one line per check.
int cmd_verify(const verify::VerifyOptions& options, std::ostream& out);

int cmd_scenarios_list(std::ostream& out);

/// Machine-readable description of a config error.
std::string config_error_json(const ConfigError& error);

}  // namespace rbrhc
