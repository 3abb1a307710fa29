#include "rbrhc/controller.hpp"

#include <cmath>

namespace rbrhc {

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::kPlanned:
      return "planned";
    case ActionKind::kEmergencyStop:
      return "emergency_stop";
    case ActionKind::kNoOp:
      return "no_op";
  }
  return "unknown";
}

RiskLedger::RiskLedger(const IRB& irb) : irb_(irb), rho_(irb.rho0) {
  if (!(irb.rho0 >= 0.0) || !(irb.delta >= 0.0)) {
    throw std::invalid_argument("interval risk bound needs rho0 >= 0 and delta >= 0");
  }
}

void RiskLedger::record(ActionKind kind, double subtracted) {
  if (!(subtracted >= 0.0) || subtracted > rho_) {
    throw std::logic_error("ledger subtraction " + std::to_string(subtracted) +
                           " outside [0, budget " + std::to_string(rho_) + "]");
  }
  LedgerEntry e;
  e.step = steps();
  e.kind = kind;
  e.rho_before = rho_;
  e.subtracted = subtracted;
  e.added = irb_.delta;
  rho_ = rho_ - subtracted;
  rho_ = rho_ + irb_.delta;
  subtracted_ += subtracted;
  e.rho_after = rho_;
  history_.push_back(e);
}

double RiskLedger::identity_residual() const {
  return std::abs(rho_ - (irb_.rho0 + irb_.delta * steps() - subtracted_));
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kRbRhc:
      return "rb-rhc";
    case Algorithm::kJccFh:
      return "jcc-fh";
    case Algorithm::kJccRhc:
      return "jcc-rhc";
    case Algorithm::kPclRhc:
      return "pcl-rhc";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kRbRhc, Algorithm::kJccFh, Algorithm::kJccRhc,
                      Algorithm::kPclRhc}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

ProblemOptions problem_options(Algorithm algorithm) {
  ProblemOptions o;
  switch (algorithm) {
    case Algorithm::kRbRhc:
      o.first_step = UpdateRule::kOpenLoop;
      o.later_steps = UpdateRule::kPcl;
      o.include_stop_risk = true;
      break;
    case Algorithm::kJccFh:
    case Algorithm::kJccRhc:
      o.first_step = UpdateRule::kOpenLoop;
      o.later_steps = UpdateRule::kOpenLoop;
      o.include_stop_risk = false;
      break;
    case Algorithm::kPclRhc:
      o.first_step = UpdateRule::kPcl;
      o.later_steps = UpdateRule::kPcl;
      o.include_stop_risk = false;
      break;
  }
  return o;
}

LatticePlanner::LatticePlanner(const PlanningEnv& env, ProblemOptions opts)
    : env_(env), opts_(opts) {}

std::optional<PlannedAction<double>> LatticePlanner::solve(const WorldBelief& b, double rho) {
  SolveResult r = solve_chance_constrained(b, rho, env_, opts_);
  last_stats_ = r.stats;
  last_plan_ = r.plan;
  if (!r.plan || r.plan->controls.empty()) return std::nullopt;
  return PlannedAction<double>{r.plan->controls.front(), r.plan->step_risks.front().total(),
                               r.plan->total_risk};
}

double LatticePlanner::first_step_risk(const WorldBelief& b, double accel) const {
  const WorldBelief next = open_loop_update(b, accel, env_.belief_model);
  return step_risk(next, env_.collision, env_.belief_model, env_.stop, opts_.include_stop_risk)
      .total();
}

StepDecision<double> fixed_constraint_step(const WorldBelief& b, const PlanningEnv& env,
                                           const ProblemOptions& opts, double alpha) {
  const SolveResult r = solve_chance_constrained(b, alpha, env, opts);
  if (r.plan && !r.plan->controls.empty()) {
    return {r.plan->controls.front(), ActionKind::kPlanned, 0.0, r.plan->total_risk};
  }
  if (is_stopped(b.ego)) return {0.0, ActionKind::kNoOp, 0.0, 0.0};
  return {-env.stop.u_stop, ActionKind::kEmergencyStop, 0.0, 0.0};
}

StepDecision<double> jcc_rhc_step(const WorldBelief& b, const PlanningEnv& env,
                                  double per_iter_alpha) {
  return fixed_constraint_step(b, env, problem_options(Algorithm::kJccRhc), per_iter_alpha);
}

StepDecision<double> pcl_rhc_step(const WorldBelief& b, const PlanningEnv& env,
                                  double per_iter_alpha) {
  return fixed_constraint_step(b, env, problem_options(Algorithm::kPclRhc), per_iter_alpha);
}

std::optional<SpeedPlan> jcc_fh_plan(const WorldBelief& b0, double alpha, const PlanningEnv& env,
                                     int T) {
  ProblemOptions opts = problem_options(Algorithm::kJccFh);
  opts.horizon = T;
  return solve_chance_constrained(b0, alpha, env, opts).plan;
}

}  // namespace rbrhc
