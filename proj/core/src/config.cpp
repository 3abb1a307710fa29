#include "rbrhc/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rbrhc/errors.hpp"

namespace rbrhc {

using nlohmann::json;

const char* to_string(ConfigError::Kind kind) {
  switch (kind) {
    case ConfigError::Kind::kMissingFile:
      return "missing_file";
    case ConfigError::Kind::kSyntax:
      return "syntax";
    case ConfigError::Kind::kUnknownKey:
      return "unknown_key";
    case ConfigError::Kind::kValidation:
      return "validation";
  }
  return "unknown";
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

/// Source text plus helpers that attach line numbers to errors.
class Source {
 public:
  explicit Source(const std::string& text) : text_(text) {}

  int line_of_offset(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(offset), '\n'));
  }

  /// Line of the first occurrence of "key" in the text, 0 if absent.
  int line_of_key(const std::string& key) const {
    const auto pos = text_.find("\"" + key + "\"");
    return pos == std::string::npos ? 0 : line_of_offset(pos);
  }

  [[noreturn]] void fail(ConfigError::Kind kind, const std::string& field,
                         const std::string& message) const {
    const std::string leaf = field.substr(field.find_last_of('.') + 1);
    const int line = line_of_key(leaf);
    std::string msg = message;
    if (line > 0) msg += " (line " + std::to_string(line) + ")";
    throw ConfigError(kind, field, line, msg);
  }

 private:
  const std::string& text_;
};

void check_keys(const Source& src, const json& obj, const std::string& where,
                const std::vector<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    // Nearest key within half the longer name's length, ties to the longer
    // shared prefix.
    std::string best;
    std::size_t best_d = 0;
    std::size_t best_prefix = 0;
    for (const auto& cand : allowed) {
      const std::size_t d = levenshtein(key, cand);
      if (d > std::max(key.size(), cand.size()) / 2 + 1) continue;
      const auto mis = std::mismatch(key.begin(), key.end(), cand.begin(), cand.end());
      const auto prefix = static_cast<std::size_t>(mis.first - key.begin());
      if (best.empty() || d < best_d || (d == best_d && prefix > best_prefix)) {
        best_d = d;
        best_prefix = prefix;
        best = cand;
      }
    }
    const std::string field = where.empty() ? key : where + "." + key;
    std::string msg = "unknown key '" + field + "'";
    if (!best.empty()) msg += "; did you mean '" + best + "'?";
    src.fail(ConfigError::Kind::kUnknownKey, field, msg);
  }
}

double get_number(const Source& src, const json& obj, const std::string& key,
                  const std::string& field, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) src.fail(ConfigError::Kind::kValidation, field, field + " must be a number");
  return v.get<double>();
}

long long get_integer(const Source& src, const json& obj, const std::string& key,
                      const std::string& field, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    src.fail(ConfigError::Kind::kValidation, field, field + " must be an integer");
  }
  return v.get<long long>();
}

std::string get_string(const Source& src, const json& obj, const std::string& key,
                       const std::string& field, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) src.fail(ConfigError::Kind::kValidation, field, field + " must be a string");
  return v.get<std::string>();
}

bool get_bool(const Source& src, const json& obj, const std::string& key, const std::string& field,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) src.fail(ConfigError::Kind::kValidation, field, field + " must be a boolean");
  return v.get<bool>();
}

std::vector<Vec2> get_points(const Source& src, const json& obj, const std::string& key,
                             const std::string& field) {
  if (!obj.contains(key)) src.fail(ConfigError::Kind::kValidation, field, field + " is required");
  const json& v = obj.at(key);
  if (!v.is_array()) src.fail(ConfigError::Kind::kValidation, field, field + " must be a list of [x, y]");
  std::vector<Vec2> pts;
  for (const json& p : v) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      src.fail(ConfigError::Kind::kValidation, field, field + " must be a list of [x, y]");
    }
    pts.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return pts;
}

VehicleBody parse_body(const Source& src, const json& obj, const std::string& field) {
  if (!obj.is_object()) src.fail(ConfigError::Kind::kValidation, field, field + " must be an object");
  check_keys(src, obj, field, {"length", "width", "parts"});
  VehicleBody body;
  if (obj.contains("parts")) {
    if (obj.contains("length") || obj.contains("width")) {
      src.fail(ConfigError::Kind::kValidation, field, field + " takes either parts or length/width");
    }
    const json& parts = obj.at("parts");
    if (!parts.is_array()) src.fail(ConfigError::Kind::kValidation, field, field + ".parts must be a list");
    for (const json& p : parts) {
      if (!p.is_object()) src.fail(ConfigError::Kind::kValidation, field, field + ".parts entries must be objects");
      check_keys(src, p, field + ".parts", {"length", "width", "offset"});
      FootprintSpec fp;
      fp.length = get_number(src, p, "length", field + ".length", 0.0);
      fp.width = get_number(src, p, "width", field + ".width", 0.0);
      fp.offset = get_number(src, p, "offset", field + ".offset", 0.0);
      body.parts.push_back(fp);
    }
  } else {
    body = VehicleBody::rectangle(get_number(src, obj, "length", field + ".length", 0.0),
                                  get_number(src, obj, "width", field + ".width", 0.0));
  }
  return body;
}

json body_json(const VehicleBody& body) {
  json parts = json::array();
  for (const auto& p : body.parts) {
    parts.push_back({{"length", p.length}, {"width", p.width}, {"offset", p.offset}});
  }
  return {{"parts", parts}};
}

json points_json(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x(), p.y()});
  return arr;
}

Scenario parse_scenario(const Source& src, const json& j) {
  if (!j.is_object()) src.fail(ConfigError::Kind::kValidation, "scenario", "scenario must be an object");
  check_keys(src, j, "scenario",
             {"name", "description", "dt", "T", "N", "s_res", "v_res", "disks", "passive_safety",
              "process_noise_s", "process_noise_v", "observation_noise", "rho0", "delta", "ego",
              "agents"});
  Scenario sc;
  sc.name = get_string(src, j, "name", "scenario.name", "inline");
  sc.description = get_string(src, j, "description", "scenario.description", "");
  sc.dt = get_number(src, j, "dt", "scenario.dt", sc.dt);
  sc.T = static_cast<int>(get_integer(src, j, "T", "scenario.T", sc.T));
  sc.N = static_cast<int>(get_integer(src, j, "N", "scenario.N", sc.N));
  sc.s_res = get_number(src, j, "s_res", "scenario.s_res", sc.s_res);
  sc.v_res = get_number(src, j, "v_res", "scenario.v_res", sc.v_res);
  sc.disks_per_part = static_cast<int>(get_integer(src, j, "disks", "scenario.disks", sc.disks_per_part));
  sc.passive_safety = get_bool(src, j, "passive_safety", "scenario.passive_safety", sc.passive_safety);
  sc.process_noise_s = get_number(src, j, "process_noise_s", "scenario.process_noise_s", sc.process_noise_s);
  sc.process_noise_v = get_number(src, j, "process_noise_v", "scenario.process_noise_v", sc.process_noise_v);
  sc.observation_noise =
      get_number(src, j, "observation_noise", "scenario.observation_noise", sc.observation_noise);
  sc.rho0 = get_number(src, j, "rho0", "scenario.rho0", sc.rho0);
  sc.delta = get_number(src, j, "delta", "scenario.delta", sc.delta);

  if (!j.contains("ego")) src.fail(ConfigError::Kind::kValidation, "scenario.ego", "scenario.ego is required");
  const json& e = j.at("ego");
  if (!e.is_object()) src.fail(ConfigError::Kind::kValidation, "scenario.ego", "scenario.ego must be an object");
  check_keys(src, e, "scenario.ego",
             {"path", "body", "init_s", "init_v", "init_s_sd", "init_v_sd", "goal_s", "v_max",
              "u_stop", "accels"});
  sc.ego.path = get_points(src, e, "path", "ego.path");
  if (!e.contains("body")) src.fail(ConfigError::Kind::kValidation, "ego.body", "ego.body is required");
  sc.ego.body = parse_body(src, e.at("body"), "ego.body");
  sc.ego.init.s = get_number(src, e, "init_s", "ego.init_s", 0.0);
  sc.ego.init.v = get_number(src, e, "init_v", "ego.init_v", 0.0);
  sc.ego.init_s_sd = get_number(src, e, "init_s_sd", "ego.init_s_sd", 0.0);
  sc.ego.init_v_sd = get_number(src, e, "init_v_sd", "ego.init_v_sd", 0.0);
  sc.ego.goal_s = get_number(src, e, "goal_s", "ego.goal_s", 0.0);
  sc.ego.v_max = get_number(src, e, "v_max", "ego.v_max", sc.ego.v_max);
  sc.ego.u_stop = get_number(src, e, "u_stop", "ego.u_stop", sc.ego.u_stop);
  if (e.contains("accels")) {
    const json& a = e.at("accels");
    if (!a.is_array()) src.fail(ConfigError::Kind::kValidation, "ego.accels", "ego.accels must be a list");
    sc.ego.accels.clear();
    for (const json& x : a) {
      if (!x.is_number()) src.fail(ConfigError::Kind::kValidation, "ego.accels", "ego.accels must hold numbers");
      sc.ego.accels.push_back(x.get<double>());
    }
  }

  if (j.contains("agents")) {
    const json& agents = j.at("agents");
    if (!agents.is_array()) src.fail(ConfigError::Kind::kValidation, "agents", "agents must be a list");
    for (const json& a : agents) {
      if (!a.is_object()) src.fail(ConfigError::Kind::kValidation, "agents", "agents entries must be objects");
      check_keys(src, a, "agents", {"name", "body", "patterns"});
      AgentSpec spec;
      spec.name = get_string(src, a, "name", "agents.name", "agent" + std::to_string(sc.agents.size()));
      if (!a.contains("body")) src.fail(ConfigError::Kind::kValidation, "agents.body", "agents.body is required");
      spec.body = parse_body(src, a.at("body"), "agents.body");
      if (!a.contains("patterns") || !a.at("patterns").is_array()) {
        src.fail(ConfigError::Kind::kValidation, "agents.patterns", "agents.patterns must be a list");
      }
      for (const json& p : a.at("patterns")) {
        if (!p.is_object()) src.fail(ConfigError::Kind::kValidation, "patterns", "patterns entries must be objects");
        check_keys(src, p, "patterns",
                   {"weight", "path", "speed", "start_s", "start_delay", "sigma0", "sigma_rate"});
        PatternSpec ps;
        ps.weight = get_number(src, p, "weight", "patterns.weight", 1.0);
        ps.waypoints = get_points(src, p, "path", "patterns.path");
        ps.speed = get_number(src, p, "speed", "patterns.speed", 0.0);
        ps.start_s = get_number(src, p, "start_s", "patterns.start_s", 0.0);
        ps.start_delay = static_cast<int>(get_integer(src, p, "start_delay", "patterns.start_delay", 0));
        ps.sigma0 = get_number(src, p, "sigma0", "patterns.sigma0", 0.0);
        ps.sigma_rate = get_number(src, p, "sigma_rate", "patterns.sigma_rate", 0.0);
        spec.patterns.push_back(std::move(ps));
      }
      sc.agents.push_back(std::move(spec));
    }
  }
  return sc;
}

json scenario_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["description"] = sc.description;
  j["dt"] = sc.dt;
  j["T"] = sc.T;
  j["N"] = sc.N;
  j["s_res"] = sc.s_res;
  j["v_res"] = sc.v_res;
  j["disks"] = sc.disks_per_part;
  j["passive_safety"] = sc.passive_safety;
  j["process_noise_s"] = sc.process_noise_s;
  j["process_noise_v"] = sc.process_noise_v;
  j["observation_noise"] = sc.observation_noise;
  j["rho0"] = sc.rho0;
  j["delta"] = sc.delta;
  j["ego"] = {{"path", points_json(sc.ego.path)},
              {"body", body_json(sc.ego.body)},
              {"init_s", sc.ego.init.s},
              {"init_v", sc.ego.init.v},
              {"init_s_sd", sc.ego.init_s_sd},
              {"init_v_sd", sc.ego.init_v_sd},
              {"goal_s", sc.ego.goal_s},
              {"v_max", sc.ego.v_max},
              {"u_stop", sc.ego.u_stop},
              {"accels", sc.ego.accels}};
  json agents = json::array();
  for (const auto& a : sc.agents) {
    json patterns = json::array();
    for (const auto& p : a.patterns) {
      patterns.push_back({{"weight", p.weight},
                          {"path", points_json(p.waypoints)},
                          {"speed", p.speed},
                          {"start_s", p.start_s},
                          {"start_delay", p.start_delay},
                          {"sigma0", p.sigma0},
                          {"sigma_rate", p.sigma_rate}});
    }
    agents.push_back({{"name", a.name}, {"body", body_json(a.body)}, {"patterns", patterns}});
  }
  j["agents"] = agents;
  return j;
}

json parse_json(const std::string& text, const Source& src) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = src.line_of_offset(e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(ConfigError::Kind::kSyntax, "", line,
                      "malformed JSON at line " + std::to_string(line) + ": " + e.what());
  }
}

std::string read_file(const std::string& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(ConfigError::Kind::kMissingFile, field, 0, "cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* mode_name(SimMode mode) {
  return mode == SimMode::kGuarantee ? "guarantee" : "model-mismatch";
}

RunConfig defaults_from(const Scenario& sc, const std::string& name) {
  RunConfig c;
  c.scenario = name;
  c.rho0 = sc.rho0;
  c.delta = sc.delta;
  c.T = sc.T;
  c.N = sc.N;
  c.s_res = sc.s_res;
  c.v_res = sc.v_res;
  c.disks = sc.disks_per_part;
  return c;
}

bool is_builtin(const std::string& name) {
  if (name == "exp1" || name == "exp2") return true;
  for (const auto& info : builtin_scenarios()) {
    if (info.name == name) return true;
  }
  return false;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  const Source src(text);
  return parse_scenario(src, parse_json(text, src));
}

std::string emit_scenario(const Scenario& scenario) { return scenario_json(scenario).dump(2) + "\n"; }

void apply_overrides(const RunConfig& c, Scenario& sc) {
  sc.rho0 = c.rho0;
  sc.delta = c.delta;
  sc.T = c.T;
  sc.N = c.N;
  sc.s_res = c.s_res;
  sc.v_res = c.v_res;
  sc.disks_per_part = c.disks;
}

ParsedConfig default_config(const std::string& scenario_name) {
  ParsedConfig out;
  out.scenario = builtin_scenario(scenario_name);
  out.config = defaults_from(out.scenario, scenario_name);
  apply_overrides(out.config, out.scenario);
  return out;
}

ParsedConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  const Source src(text);
  const json j = parse_json(text, src);
  if (!j.is_object()) {
    throw ConfigError(ConfigError::Kind::kSyntax, "", 1, "config must be a JSON object");
  }
  check_keys(src, j, "",
             {"scenario", "algorithms", "rho0", "delta", "T", "N", "trials", "seed", "output_dir",
              "s_res", "v_res", "disks", "mode", "mismatch_scale", "threads"});

  ParsedConfig out;
  std::string name = "exp1_tjunction";
  std::string inline_text;
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    if (s.is_object()) {
      out.scenario = parse_scenario(src, s);
      name = "inline";
      inline_text = s.dump();
    } else if (s.is_string()) {
      name = s.get<std::string>();
      if (is_builtin(name)) {
        out.scenario = builtin_scenario(name);
      } else {
        const std::filesystem::path p = std::filesystem::path(base_dir) / name;
        out.scenario = parse_scenario_text(read_file(p.string(), "scenario"));
      }
    } else {
      src.fail(ConfigError::Kind::kValidation, "scenario", "scenario must be a name, path or object");
    }
  } else {
    out.scenario = builtin_scenario(name);
  }

  RunConfig c = defaults_from(out.scenario, name);
  c.scenario_inline = inline_text;
  if (j.contains("algorithms")) {
    const json& a = j.at("algorithms");
    if (!a.is_array() || a.empty()) {
      src.fail(ConfigError::Kind::kValidation, "algorithms", "algorithms must be a non-empty list");
    }
    c.algorithms.clear();
    std::set<Algorithm> seen;
    for (const json& x : a) {
      const auto alg = x.is_string() ? parse_algorithm(x.get<std::string>()) : std::nullopt;
      if (!alg) {
        src.fail(ConfigError::Kind::kValidation, "algorithms",
                 "algorithms entries must be one of rb-rhc, jcc-fh, jcc-rhc, pcl-rhc");
      }
      if (!seen.insert(*alg).second) {
        src.fail(ConfigError::Kind::kValidation, "algorithms", "algorithms must not repeat");
      }
      c.algorithms.push_back(*alg);
    }
  }
  c.rho0 = get_number(src, j, "rho0", "rho0", c.rho0);
  c.delta = get_number(src, j, "delta", "delta", c.delta);
  c.T = static_cast<int>(get_integer(src, j, "T", "T", c.T));
  c.N = static_cast<int>(get_integer(src, j, "N", "N", c.N));
  c.trials = static_cast<int>(get_integer(src, j, "trials", "trials", c.trials));
  const long long seed = get_integer(src, j, "seed", "seed", static_cast<long long>(c.seed));
  if (seed < 0) src.fail(ConfigError::Kind::kValidation, "seed", "seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.output_dir = get_string(src, j, "output_dir", "output_dir", c.output_dir);
  c.s_res = get_number(src, j, "s_res", "s_res", c.s_res);
  c.v_res = get_number(src, j, "v_res", "v_res", c.v_res);
  c.disks = static_cast<int>(get_integer(src, j, "disks", "disks", c.disks));
  const std::string mode = get_string(src, j, "mode", "mode", mode_name(c.mode));
  if (mode == "guarantee") {
    c.mode = SimMode::kGuarantee;
  } else if (mode == "model-mismatch") {
    c.mode = SimMode::kModelMismatch;
  } else {
    src.fail(ConfigError::Kind::kValidation, "mode", "mode must be 'guarantee' or 'model-mismatch'");
  }
  c.mismatch_scale = get_number(src, j, "mismatch_scale", "mismatch_scale", c.mismatch_scale);
  c.threads = static_cast<int>(get_integer(src, j, "threads", "threads", c.threads));

  const auto bad = [&](const std::string& field, const std::string& msg) {
    src.fail(ConfigError::Kind::kValidation, field, field + " " + msg);
  };
  if (!(c.rho0 >= 0.0 && c.rho0 <= 1.0)) bad("rho0", "must lie in [0, 1]");
  if (!(c.delta >= 0.0 && c.delta <= 1.0)) bad("delta", "must lie in [0, 1]");
  if (c.T < 1) bad("T", "must be at least 1");
  if (c.N < 1 || c.N > c.T) bad("N", "must satisfy 1 <= N <= T");
  if (c.trials < 1) bad("trials", "must be at least 1");
  if (!(c.s_res > 0.0)) bad("s_res", "must be positive");
  if (!(c.v_res > 0.0)) bad("v_res", "must be positive");
  if (c.disks < 1) bad("disks", "must be at least 1");
  if (!(c.mismatch_scale > 0.0)) bad("mismatch_scale", "must be positive");
  if (c.threads < 1) bad("threads", "must be at least 1");
  if (c.output_dir.empty()) bad("output_dir", "must not be empty");

  apply_overrides(c, out.scenario);
  out.scenario.validate();
  out.config = c;
  return out;
}

ParsedConfig parse_config_file(const std::string& path) {
  const std::string text = read_file(path, "config");
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_config_text(text, dir.empty() ? "." : dir);
}

std::string emit_config(const RunConfig& c) {
  json j;
  if (c.scenario_inline.empty()) {
    j["scenario"] = c.scenario;
  } else {
    j["scenario"] = json::parse(c.scenario_inline);
  }
  json algs = json::array();
  for (Algorithm a : c.algorithms) algs.push_back(std::string(to_string(a)));
  j["algorithms"] = algs;
  j["rho0"] = c.rho0;
  j["delta"] = c.delta;
  j["T"] = c.T;
  j["N"] = c.N;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["s_res"] = c.s_res;
  j["v_res"] = c.v_res;
  j["disks"] = c.disks;
  j["mode"] = mode_name(c.mode);
  j["mismatch_scale"] = c.mismatch_scale;
  j["threads"] = c.threads;
  return j.dump(2) + "\n";
}

}  // namespace rbrhc
