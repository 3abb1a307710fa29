#pragma once

#include <concepts>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rbrhc/belief.hpp"
#include "rbrhc/planner.hpp"

namespace rbrhc {

/// Interval risk bound: P(any collision within k steps) <= rho0 + delta * k.
struct IRB {
  double rho0 = 0.01;
  double delta = 0.0;
  int T = 25;

  double bound(int k) const { return rho0 + delta * k; }
  double total() const { return bound(T); }
};

enum class ActionKind { kPlanned, kEmergencyStop, kNoOp };

const char* to_string(ActionKind kind);

struct LedgerEntry {
  int step = 0;
  ActionKind kind = ActionKind::kPlanned;
  double rho_before = 0.0;
  double subtracted = 0.0;
  double added = 0.0;
  double rho_after = 0.0;
};

/// Risk budget bookkeeping: each step first subtracts the risk the executed
/// action incurs, then adds delta.
class RiskLedger {
 public:
  explicit RiskLedger(const IRB& irb);

  double budget() const { return rho_; }
  const IRB& irb() const { return irb_; }
  int steps() const { return static_cast<int>(history_.size()); }
  const std::vector<LedgerEntry>& history() const { return history_; }
  double total_subtracted() const { return subtracted_; }

  /// Throws std::logic_error if `subtracted` is negative or exceeds the
  /// current budget.
  void record(ActionKind kind, double subtracted);

  /// |rho - (rho0 + delta * k - total subtracted)|.
  double identity_residual() const;

 private:
  IRB irb_;
  double rho_;
  double subtracted_ = 0.0;
  std::vector<LedgerEntry> history_;
};

/// What a budgeted planner reports for one query.
template <class Control>
struct PlannedAction {
  Control control;
  /// g_b + g_stop_b at the open-loop successor, as used in the constraint.
  double first_step_risk = 0.0;
  double planned_risk = 0.0;
};

template <class Control>
struct StepDecision {
  Control control;
  ActionKind kind = ActionKind::kPlanned;
  double subtracted = 0.0;
  double planned_risk = 0.0;
};

/// Interface the budgeted controller needs from a planner/model pair.
template <class A>
concept BudgetedPlanner = requires(A& a, const typename A::Belief& b,
                                   const typename A::Control& u, double rho) {
  { a.solve(b, rho) } -> std::same_as<std::optional<PlannedAction<typename A::Control>>>;
  { a.first_step_risk(b, u) } -> std::convertible_to<double>;
  { a.is_stopped(b) } -> std::convertible_to<bool>;
  { a.stop_control(b) } -> std::same_as<typename A::Control>;
  { a.noop_control(b) } -> std::same_as<typename A::Control>;
};

/// One iteration of the risk-budget receding horizon controller. On a
/// feasible solve the first action's risk (recomputed from the open-loop
/// successor and required to match the planner's annotation exactly) is
/// subtracted; otherwise the vehicle brakes, or idles if already stopped,
/// with nothing subtracted. delta is added in every case.
template <BudgetedPlanner A>
StepDecision<typename A::Control> rbrhc_step(const typename A::Belief& b, RiskLedger& ledger,
                                             A& planner) {
  using Control = typename A::Control;
  const std::optional<PlannedAction<Control>> planned = planner.solve(b, ledger.budget());
  if (planned) {
    const double recomputed = planner.first_step_risk(b, planned->control);
    if (recomputed != planned->first_step_risk) {
      throw std::logic_error("first-step risk annotation " +
                             std::to_string(planned->first_step_risk) +
                             " differs from recomputed " + std::to_string(recomputed));
    }
    ledger.record(ActionKind::kPlanned, recomputed);
    return {planned->control, ActionKind::kPlanned, recomputed, planned->planned_risk};
  }
  if (planner.is_stopped(b)) {
    ledger.record(ActionKind::kNoOp, 0.0);
    return {planner.noop_control(b), ActionKind::kNoOp, 0.0, 0.0};
  }
  ledger.record(ActionKind::kEmergencyStop, 0.0);
  return {planner.stop_control(b), ActionKind::kEmergencyStop, 0.0, 0.0};
}

enum class Algorithm { kRbRhc, kJccFh, kJccRhc, kPclRhc };

std::string_view to_string(Algorithm algorithm);
/// Accepts "rb-rhc", "jcc-fh", "jcc-rhc", "pcl-rhc".
std::optional<Algorithm> parse_algorithm(std::string_view name);

/// Problem flags of each controller's planning query.
ProblemOptions problem_options(Algorithm algorithm);

/// Continuous planner adapter for rbrhc_step.
class LatticePlanner {
 public:
  using Belief = WorldBelief;
  using Control = double;

  LatticePlanner(const PlanningEnv& env, ProblemOptions opts);

  std::optional<PlannedAction<double>> solve(const WorldBelief& b, double rho);
  double first_step_risk(const WorldBelief& b, double accel) const;
  bool is_stopped(const WorldBelief& b) const { return rbrhc::is_stopped(b.ego); }
  double stop_control(const WorldBelief&) const { return -env_.stop.u_stop; }
  double noop_control(const WorldBelief&) const { return 0.0; }

  const SolveStats& last_stats() const { return last_stats_; }
  const std::optional<SpeedPlan>& last_plan() const { return last_plan_; }

 private:
  const PlanningEnv& env_;
  ProblemOptions opts_;
  SolveStats last_stats_;
  std::optional<SpeedPlan> last_plan_;
};

/// Unbudgeted receding-horizon step with a fixed per-iteration chance
/// constraint; infeasibility falls back to braking or idling.
StepDecision<double> fixed_constraint_step(const WorldBelief& b, const PlanningEnv& env,
                                           const ProblemOptions& opts, double alpha);

/// Open-loop joint chance constraint, replanned every step.
StepDecision<double> jcc_rhc_step(const WorldBelief& b, const PlanningEnv& env,
                                  double per_iter_alpha);

/// Partially-closed-loop prediction on every step, no stop-risk term.
StepDecision<double> pcl_rhc_step(const WorldBelief& b, const PlanningEnv& env,
                                  double per_iter_alpha);

/// One open-loop plan over `T` steps with total risk <= alpha, or nullopt.
std::optional<SpeedPlan> jcc_fh_plan(const WorldBelief& b0, double alpha, const PlanningEnv& env,
                                     int T);

}  // namespace rbrhc
