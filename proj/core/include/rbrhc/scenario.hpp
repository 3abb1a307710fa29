#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rbrhc/belief.hpp"
#include "rbrhc/planner.hpp"
#include "rbrhc/vehicle_models.hpp"

namespace rbrhc {

/// One motion pattern: constant-speed travel along a polyline with an
/// isotropic position standard deviation sigma0 + sigma_rate * t.
struct PatternSpec {
  double weight = 1.0;
  std::vector<Vec2> waypoints;
  double speed = 0.0;      ///< m/s along the polyline
  double start_s = 0.0;    ///< arc length at step 0
  int start_delay = 0;     ///< steps spent waiting at start_s
  double sigma0 = 0.0;     ///< m
  double sigma_rate = 0.0; ///< m per second

  friend bool operator==(const PatternSpec&, const PatternSpec&) = default;
};

/// Samples `steps` predicted steps of a pattern.
PredictedTrajectory build_pattern_trajectory(const PatternSpec& spec, double dt, int steps);

struct AgentSpec {
  std::string name;
  VehicleBody body;
  std::vector<PatternSpec> patterns;
};

struct EgoSpec {
  std::vector<Vec2> path;
  VehicleBody body;
  EgoKinematicState init;
  double init_s_sd = 0.0;
  double init_v_sd = 0.0;
  double goal_s = 0.0;
  double v_max = 5.0;
  double u_stop = 2.0;
  std::vector<double> accels{-2.0, -1.0, 0.0, 1.0};
};

/// A complete planning/simulation setup. Agent pattern trajectories are
/// built once (see prepare) and shared by planner beliefs and ground-truth
/// sampling.
struct Scenario {
  std::string name;
  std::string description;
  EgoSpec ego;
  std::vector<AgentSpec> agents;
  double dt = 1.0;
  int T = 25;
  int N = 25;
  double s_res = 0.5;
  double v_res = 0.5;
  int disks_per_part = 3;
  bool passive_safety = true;
  double process_noise_s = 0.05;  ///< std of s tracking error per sqrt(second)
  double process_noise_v = 0.0;   ///< std of v tracking error per sqrt(second)
  double observation_noise = 0.5; ///< std of observed agent positions
  double rho0 = 0.01;
  double delta = 0.0;

  /// Throws ConfigError (validation) on inconsistent values.
  void validate() const;
};

/// Scenario with derived, immutable planning objects.
class PreparedScenario {
 public:
  explicit PreparedScenario(Scenario scenario);

  const Scenario& spec() const { return scenario_; }
  const PlanningEnv& env() const { return env_; }
  const std::shared_ptr<const ReferencePath>& path() const { return path_; }
  /// Number of predicted steps per pattern: T + N + t_stop + 1.
  int prediction_steps() const { return prediction_steps_; }
  /// Agent beliefs at step 0 (prior pattern weights).
  const std::vector<AgentMixture>& agent_priors() const { return priors_; }

  WorldBelief initial_belief(const EgoKinematicState& ego) const;

 private:
  Scenario scenario_;
  std::shared_ptr<const ReferencePath> path_;
  PlanningEnv env_;
  int prediction_steps_ = 0;
  std::vector<AgentMixture> priors_;
};

struct ScenarioInfo {
  std::string name;
  std::string description;
};

/// Names accepted by builtin_scenario.
std::vector<ScenarioInfo> builtin_scenarios();

/// Throws ConfigError (validation) for unknown names. "exp1" and "exp2" are
/// aliases of "exp1_tjunction" and "exp2_three_vehicle".
Scenario builtin_scenario(const std::string& name);

}  // namespace rbrhc
