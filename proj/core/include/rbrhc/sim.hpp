#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rbrhc/controller.hpp"
#include "rbrhc/scenario.hpp"

namespace rbrhc {

/// Realized world for one trial.
struct GroundTruth {
  EgoKinematicState ego_init;
  std::vector<std::size_t> pattern;           ///< drawn pattern per agent
  std::vector<std::vector<Pose>> agent_poses; ///< per agent, per step
};

/// Draws each agent's pattern by weight, then one standard normal 2-vector
/// per agent that is scaled by every step's covariance factor, so the
/// realized path is smooth and each step's marginal matches the prediction.
/// `noise_scale` inflates the realized deviation (model-mismatch runs).
GroundTruth sample_ground_truth(const PreparedScenario& scenario, std::uint64_t seed,
                                double noise_scale = 1.0);

enum class SimMode { kGuarantee, kModelMismatch };

struct StepRecord {
  int step = 0;
  double control = 0.0;
  ActionKind kind = ActionKind::kPlanned;
  EgoKinematicState ego;      ///< realized state after the step
  double rho = 0.0;           ///< budget when the step was planned (RB-RHC only)
  double planned_risk = 0.0;
  double min_agent_distance = 0.0;
  bool collided = false;
  double cost = 0.0;
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  double total_cost = 0.0;
  bool collided = false;
  bool reached_goal = false;
  /// The first planning query was infeasible (the start was not safely
  /// recoverable under the budget).
  bool infeasible_start = false;
  double max_ledger_residual = 0.0;
  /// Steps at which cumulative subtracted risk exceeded rho0 + delta * k.
  int budget_excursions = 0;
};

struct EpisodeOptions {
  SimMode mode = SimMode::kGuarantee;
  double mismatch_scale = 2.0;
};

EpisodeTrace run_episode(Algorithm algorithm, const PreparedScenario& scenario, const IRB& irb,
                         std::uint64_t seed, const EpisodeOptions& options = {});

struct TrialResult {
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::kRbRhc;
  bool collided = false;
  double cost = 0.0;
  int steps = 0;
  bool reached_goal = false;
  bool infeasible_start = false;
  double max_ledger_residual = 0.0;
  int budget_excursions = 0;
  std::vector<double> rho;
  std::vector<double> planned_risk;
  std::vector<double> min_agent_distance;
  std::string error;
};

struct AlgorithmSummary {
  Algorithm algorithm = Algorithm::kRbRhc;
  long trials = 0;
  long collisions = 0;
  long errors = 0;
  long infeasible_starts = 0;
  double collision_rate = 0.0;
  double collision_rate_se = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  double mean_cost = 0.0;
  double cost_se = 0.0;
  double max_ledger_residual = 0.0;
  long budget_excursions = 0;
};

struct MonteCarloOptions {
  EpisodeOptions episode;
  int threads = 1;
};

struct MonteCarloResult {
  /// Ordered by seed, then by the order of the requested algorithms.
  std::vector<TrialResult> trials;
  std::vector<AlgorithmSummary> summaries;
  /// More than 1% of trials of some algorithm raised an error.
  bool failed = false;
};

/// Seeds base_seed .. base_seed + M - 1, each shared by every algorithm.
MonteCarloResult run_monte_carlo(const PreparedScenario& scenario,
                                 const std::vector<Algorithm>& algorithms, const IRB& irb, int M,
                                 std::uint64_t base_seed, const MonteCarloOptions& options = {});

AlgorithmSummary summarize(Algorithm algorithm, const std::vector<TrialResult>& trials);

}  // namespace rbrhc
