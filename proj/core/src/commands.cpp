#include "rbrhc/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rbrhc/errors.hpp"
#include "rbrhc/stats.hpp"

namespace rbrhc {

using nlohmann::ordered_json;

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ordered_json jnum(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << contents;
  if (!f.flush()) throw std::runtime_error("cannot write " + path.string());
}

std::string trials_csv(const MonteCarloResult& r) {
  std::string s = "seed,algorithm,collided,cost,steps\n";
  for (const auto& t : r.trials) {
    s += std::to_string(t.seed) + "," + std::string(to_string(t.algorithm)) + "," +
         (t.collided ? "1" : "0") + "," + (t.error.empty() ? num(t.cost) : std::string()) + "," +
         std::to_string(t.steps) + "\n";
  }
  return s;
}

std::string trace_csv(const MonteCarloResult& r, Algorithm alg) {
  std::string s = "seed,step,rho,planned_risk,min_agent_distance\n";
  for (const auto& t : r.trials) {
    if (t.algorithm != alg) continue;
    for (std::size_t k = 0; k < t.planned_risk.size(); ++k) {
      s += std::to_string(t.seed) + "," + std::to_string(k) + "," + num(t.rho[k]) + "," +
           num(t.planned_risk[k]) + "," + num(t.min_agent_distance[k]) + "\n";
    }
  }
  return s;
}

std::vector<double> costs_of(const MonteCarloResult& r, Algorithm alg) {
  std::vector<double> c;
  for (const auto& t : r.trials) {
    if (t.algorithm == alg) c.push_back(t.cost);
  }
  return c;
}

std::string summary_json(const MonteCarloResult& r, const RunConfig& c) {
  ordered_json j;
  j["scenario"] = c.scenario;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["failed"] = r.failed;
  ordered_json algs = ordered_json::array();
  for (const auto& s : r.summaries) {
    ordered_json a;
    a["algorithm"] = std::string(to_string(s.algorithm));
    a["trials"] = s.trials;
    a["collisions"] = s.collisions;
    a["errors"] = s.errors;
    a["infeasible_starts"] = s.infeasible_starts;
    a["collision_rate"] = jnum(s.collision_rate);
    a["collision_rate_se"] = jnum(s.collision_rate_se);
    a["wilson95"] = {jnum(s.wilson_lo), jnum(s.wilson_hi)};
    a["mean_cost"] = jnum(s.mean_cost);
    a["cost_se"] = jnum(s.cost_se);
    a["max_ledger_residual"] = jnum(s.max_ledger_residual);
    a["budget_excursions"] = s.budget_excursions;
    algs.push_back(a);
  }
  j["algorithms"] = algs;

  // Paired cost differences of the budgeted controller against the others.
  ordered_json paired = ordered_json::array();
  const bool has_rb = std::find(c.algorithms.begin(), c.algorithms.end(), Algorithm::kRbRhc) !=
                      c.algorithms.end();
  if (has_rb && c.trials >= 2) {
    const auto rb = costs_of(r, Algorithm::kRbRhc);
    for (Algorithm other : c.algorithms) {
      if (other == Algorithm::kRbRhc) continue;
      const auto oc = costs_of(r, other);
      const stats::PairedT t = stats::paired_t_interval(rb, oc, 0.95);
      paired.push_back({{"baseline", std::string(to_string(other))},
                        {"mean_cost_difference", jnum(t.mean_diff)},
                        {"ci95", {jnum(t.lo), jnum(t.hi)}},
                        {"n", t.n}});
    }
  }
  j["paired_cost_vs_rb_rhc"] = paired;
  return j.dump(2) + "\n";
}

std::string manifest_json(const ParsedConfig& parsed) {
  ordered_json j;
#ifdef RBRHC_VERSION
  j["version"] = RBRHC_VERSION;
#else
  j["version"] = "unknown";
#endif
  j["config"] = ordered_json::parse(emit_config(parsed.config));
  j["resolved_scenario"] = ordered_json::parse(emit_scenario(parsed.scenario));
  j["outputs"] = {"trials.csv", "summary.json", "manifest.json"};
  for (Algorithm a : parsed.config.algorithms) {
    j["outputs"].push_back("budget_trace_" + std::string(to_string(a)) + ".csv");
  }
  return j.dump(2) + "\n";
}

}  // namespace

std::string config_error_json(const ConfigError& e) {
  ordered_json j;
  j["error"] = "config";
  j["kind"] = to_string(e.kind());
  j["field"] = e.field();
  j["line"] = e.line();
  j["message"] = e.what();
  return j.dump();
}

int cmd_run(const RunSource& source, const RunOverrides& ov, std::ostream& out, std::ostream& err) {
  ParsedConfig parsed;
  try {
    parsed = source.config_path.empty() ? default_config(source.builtin.empty() ? "exp1_tjunction"
                                                                                 : source.builtin)
                                        : parse_config_file(source.config_path);
    RunConfig& c = parsed.config;
    if (ov.algorithms) c.algorithms = *ov.algorithms;
    if (ov.trials) c.trials = *ov.trials;
    if (ov.seed) c.seed = *ov.seed;
    if (ov.threads) c.threads = *ov.threads;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) c.output_dir = env;
    if (ov.out_dir) c.output_dir = *ov.out_dir;
    if (c.algorithms.empty()) throw ConfigError(ConfigError::Kind::kValidation, "algorithms", 0, "algorithms must not be empty");
    if (c.trials < 1) throw ConfigError(ConfigError::Kind::kValidation, "trials", 0, "trials must be at least 1");
    if (c.threads < 1) throw ConfigError(ConfigError::Kind::kValidation, "threads", 0, "threads must be at least 1");
  } catch (const ConfigError& e) {
    err << config_error_json(e) << "\n";
    return kExitConfigError;
  }

  const RunConfig& c = parsed.config;
  try {
    const PreparedScenario prepared(parsed.scenario);
    IRB irb;
    irb.rho0 = c.rho0;
    irb.delta = c.delta;
    irb.T = c.T;
    MonteCarloOptions mc;
    mc.episode.mode = c.mode;
    mc.episode.mismatch_scale = c.mismatch_scale;
    mc.threads = c.threads;
    const MonteCarloResult result =
        run_monte_carlo(prepared, c.algorithms, irb, c.trials, c.seed, mc);

    const std::filesystem::path dir(c.output_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "trials.csv", trials_csv(result));
    for (Algorithm a : c.algorithms) {
      write_file(dir / ("budget_trace_" + std::string(to_string(a)) + ".csv"), trace_csv(result, a));
    }
    write_file(dir / "summary.json", summary_json(result, c));
    write_file(dir / "manifest.json", manifest_json(parsed));

    char line[200];
    std::snprintf(line, sizeof line, "%-8s %8s %10s %20s %12s\n", "algo", "trials", "collisions",
                  "wilson95", "mean cost");
    out << line;
    for (const auto& s : result.summaries) {
      std::snprintf(line, sizeof line, "%-8s %8ld %10ld    [%.4f, %.4f] %12.4f\n",
                    std::string(to_string(s.algorithm)).c_str(), s.trials, s.collisions,
                    s.wilson_lo, s.wilson_hi, s.mean_cost);
      out << line;
    }
    out << "wrote " << dir.string() << "\n";
    if (result.failed) {
      err << ordered_json{{"error", "harness"}, {"message", "more than 1% of trials failed"}}.dump()
          << "\n";
      return kExitFailure;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << config_error_json(e) << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << ordered_json{{"error", "harness"}, {"message", e.what()}}.dump() << "\n";
    return kExitFailure;
  }
}

int cmd_verify(const verify::VerifyOptions& options, std::ostream& out) {
  const auto results = verify::run_all(options);
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
  }
  out << (ok ? "all checks passed" : "some checks failed") << "\n";
  return ok ? kExitOk : kExitFailure;
}

int cmd_scenarios_list(std::ostream& out) {
  for (const auto& info : builtin_scenarios()) {
    out << info.name << "\t" << info.description << "\n";
  }
  return kExitOk;
}

}  // namespace rbrhc
