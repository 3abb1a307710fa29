#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rbrhc/controller.hpp"

namespace rbrhc::discrete {

using Belief = std::vector<double>;

/// Finite CC-POMDP. The observation kernel applies to the state reached
/// after each transition. Collision events are counted once per visit to a
/// collision state; the enumeration tracks a "has collided" flag so the risk
/// is that of the union of events.
struct Model {
  std::vector<std::string> states;
  std::vector<std::string> controls;
  std::vector<std::string> observations;
  std::vector<bool> collision;
  /// States with deterministic zero velocity; a belief is stopped when all
  /// its mass sits on them.
  std::vector<bool> stopped;
  /// transition[u][x][x']
  std::vector<std::vector<std::vector<double>>> transition;
  /// observation[x][y]
  std::vector<std::vector<double>> observation;
  /// stage_cost[x][u]
  std::vector<std::vector<double>> stage_cost;
  Belief initial;
  int horizon = 1;
  /// Maximum-deceleration control; also used as the idle control.
  int stop_control = 0;
  int t_stop = 1;

  int n_states() const { return static_cast<int>(states.size()); }
  int n_controls() const { return static_cast<int>(controls.size()); }
  int n_observations() const { return static_cast<int>(observations.size()); }

  /// Throws std::invalid_argument on shape errors or kernels that are not
  /// row-stochastic to 1e-12.
  void validate() const;
};

/// b'(x') = sum_x b(x) p(x'|x, u).
Belief open_loop_update(const Model& m, const Belief& b, int u);
/// P(y | b, u) for the observation after applying u.
double observation_probability(const Model& m, const Belief& b, int u, int y);
/// Posterior after applying u and observing y. Throws DegenerateObservation
/// when y has probability zero.
Belief bayes_update(const Model& m, const Belief& b, int u, int y);
/// Conditions on the most likely observation (ties to the lowest index).
Belief pcl_update(const Model& m, const Belief& b, int u);
/// Collision mass of a belief.
double g_b(const Model& m, const Belief& b);
double g_stop_b(const Model& m, const Belief& b);
bool is_stopped(const Model& m, const Belief& b);
double expected_cost(const Model& m, const Belief& b, int u);

/// Control policy evaluated along observation histories. act() may update
/// internal state (a risk ledger); the enumerator clones the policy at every
/// branch.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int act(int step, const Belief& b) = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
};

/// Fixed open-loop control sequence.
class SequencePolicy : public Policy {
 public:
  explicit SequencePolicy(std::vector<int> controls) : controls_(std::move(controls)) {}
  int act(int step, const Belief&) override { return controls_.at(static_cast<std::size_t>(step)); }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<SequencePolicy>(*this); }

 private:
  std::vector<int> controls_;
};

struct PolicyRisk {
  /// P(union over steps 0..T of being in a collision state).
  double exact = 0.0;
  /// Sum over steps of the collision mass (Boole upper bound).
  double per_step_sum = 0.0;
  std::int64_t nodes = 0;
};

/// Exact enumeration of the state/observation tree. Throws InstanceTooLarge
/// once more than `node_cap` histories are expanded.
PolicyRisk exact_policy_risk(const Model& m, Policy& policy, std::int64_t node_cap = 1000000);

/// Open-loop bound sum_i g_b(b_i) along a control sequence, against the
/// exact risk of executing that sequence.
struct UmdpCheck {
  double bound = 0.0;
  double exact = 0.0;
};
UmdpCheck umdp_transform_check(const Model& m, const std::vector<int>& controls);

/// Options of the exhaustive constrained sequence search.
struct SearchOptions {
  int horizon = 1;
  UpdateRule first_step = UpdateRule::kOpenLoop;
  UpdateRule later_steps = UpdateRule::kOpenLoop;
  bool include_stop_risk = false;
};

struct SequencePlan {
  std::vector<int> controls;
  std::vector<StepRisk> step_risks;
  double total_risk = 0.0;
  double cost = 0.0;
};

/// Lowest expected-cost sequence with total risk <= rho among all
/// |U|^h sequences, h = min(horizon, T - step). Ties go to the
/// lexicographically smallest sequence. nullopt when none is feasible.
std::optional<SequencePlan> solve_sequences(const Model& m, const Belief& b, int step,
                                            double rho, const SearchOptions& opts);

/// Discrete planner adapter for rbrhc_step.
class SequencePlanner {
 public:
  struct State {
    std::vector<double> belief;
    int step = 0;
  };
  using Belief = State;
  using Control = int;

  SequencePlanner(const Model& m, int horizon);

  std::optional<PlannedAction<int>> solve(const State& b, double rho) const;
  double first_step_risk(const State& b, int u) const;
  bool is_stopped(const State& b) const { return discrete::is_stopped(model_, b.belief); }
  int stop_control(const State&) const { return model_.stop_control; }
  int noop_control(const State&) const { return model_.stop_control; }

 private:
  const Model& model_;
  SearchOptions opts_;
};

/// Risk-budget receding horizon policy on a discrete model.
class BudgetPolicy : public Policy {
 public:
  BudgetPolicy(const Model& m, int horizon, const IRB& irb);
  int act(int step, const rbrhc::discrete::Belief& b) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<BudgetPolicy>(*this); }
  const RiskLedger& ledger() const { return ledger_; }
  const std::vector<ActionKind>& actions() const { return actions_; }

 private:
  SequencePlanner planner_;
  RiskLedger ledger_;
  std::vector<ActionKind> actions_;
};

/// Receding horizon policy with a fixed per-iteration constraint (open-loop
/// or PCL predictions, no stop risk, no ledger).
class FixedConstraintPolicy : public Policy {
 public:
  FixedConstraintPolicy(const Model& m, int horizon, double alpha, UpdateRule rule);
  int act(int step, const rbrhc::discrete::Belief& b) override;
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<FixedConstraintPolicy>(*this);
  }

 private:
  const Model* model_;
  SearchOptions opts_;
  double alpha_;
};

/// Two sharp curves driven at 70 (safe) or fast (100 at the first curve,
/// 90 at the second, each crashing with probability 0.1). States: curve1,
/// curve2, done, crash, wreck. A crash is a single collision event followed
/// by the non-colliding wreck state.
Model racetrack_model();

inline constexpr int kSlow = 0;
inline constexpr int kFast = 1;

struct RandomModelSpec {
  int max_states = 8;
  int max_steps = 6;
};

/// A random model plus the budgeted controller's parameters.
struct RandomInstance {
  Model model;
  int planner_horizon = 1;
  IRB irb;
};

/// Random small model: moving states brake through a "braking" state into
/// "stopped" under the stop control, every transition out of a moving state
/// may crash, and a crash either leads to the non-colliding "wreck" state or
/// (in some models) persists. The
/// instance is resampled until the budgeted search is feasible at step 0.
RandomInstance random_instance(std::uint64_t seed, const RandomModelSpec& spec = {});

}  // namespace rbrhc::discrete
