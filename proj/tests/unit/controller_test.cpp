#include <memory>
#include <optional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rbrhc/controller.hpp"
#include "rbrhc/discrete_oracle.hpp"
#include "rbrhc/verify.hpp"

namespace rbrhc {
namespace {

/// Scripted planner: returns a fixed answer and a fixed recomputed risk.
struct ScriptedPlanner {
  using Belief = int;
  using Control = double;

  std::optional<PlannedAction<double>> answer;
  double recomputed = 0.0;
  bool stopped = false;

  std::optional<PlannedAction<double>> solve(const int&, double) { return answer; }
  double first_step_risk(const int&, const double&) { return recomputed; }
  bool is_stopped(const int&) { return stopped; }
  double stop_control(const int&) { return -3.0; }
  double noop_control(const int&) { return 0.0; }
};

TEST(RbrhcStep, ZeroRiskPlanAddsDelta) {
  RiskLedger ledger({0.01, 0.001, 10});
  ScriptedPlanner p{PlannedAction<double>{1.0, 0.0, 0.0}, 0.0, false};
  const auto d = rbrhc_step(0, ledger, p);
  EXPECT_EQ(d.kind, ActionKind::kPlanned);
  EXPECT_EQ(d.control, 1.0);
  EXPECT_DOUBLE_EQ(ledger.budget(), 0.011);
}

TEST(RbrhcStep, InfeasibleWhileMovingBrakesWithoutSubtraction) {
  RiskLedger ledger({0.01, 0.002, 10});
  ScriptedPlanner p{std::nullopt, 0.0, false};
  const auto d = rbrhc_step(0, ledger, p);
  EXPECT_EQ(d.kind, ActionKind::kEmergencyStop);
  EXPECT_EQ(d.control, -3.0);
  EXPECT_EQ(d.subtracted, 0.0);
  EXPECT_DOUBLE_EQ(ledger.budget(), 0.012);
}

TEST(RbrhcStep, InfeasibleWhileStoppedIdles) {
  RiskLedger ledger({0.01, 0.0, 10});
  ScriptedPlanner p{std::nullopt, 0.0, true};
  const auto d = rbrhc_step(0, ledger, p);
  EXPECT_EQ(d.kind, ActionKind::kNoOp);
  EXPECT_EQ(d.control, 0.0);
  EXPECT_EQ(ledger.budget(), 0.01);
}

TEST(RbrhcStep, FeasiblePlanSubtractsFirstStepAndStopRisk) {
  const double r1 = 0.003;
  const double r2 = 0.002;
  RiskLedger ledger({0.01, 0.0005, 10});
  ScriptedPlanner p{PlannedAction<double>{0.0, r1 + r2, 0.008}, r1 + r2, false};
  const auto d = rbrhc_step(0, ledger, p);
  EXPECT_EQ(d.subtracted, r1 + r2);
  EXPECT_DOUBLE_EQ(ledger.budget(), 0.01 - r1 - r2 + 0.0005);
  EXPECT_EQ(d.planned_risk, 0.008);
}

TEST(RbrhcStep, AnnotationMismatchIsACallerBug) {
  RiskLedger ledger({0.01, 0.0, 10});
  ScriptedPlanner p{PlannedAction<double>{0.0, 0.001, 0.001}, 0.0011, false};
  EXPECT_THROW(rbrhc_step(0, ledger, p), std::logic_error);
}

TEST(RiskLedger, IdentityAndOverdraft) {
  RiskLedger ledger({0.05, 0.01, 20});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  double subtracted = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double s = frac(rng) * ledger.budget();
    ledger.record(ActionKind::kPlanned, s);
    subtracted += s;
    EXPECT_LE(ledger.identity_residual(), 1e-12);
    EXPECT_LE(ledger.total_subtracted(), 0.05 + 0.01 * k + 1e-12);
  }
  EXPECT_NEAR(ledger.total_subtracted(), subtracted, 1e-12);
  EXPECT_THROW(ledger.record(ActionKind::kPlanned, ledger.budget() * 2.0 + 1.0), std::logic_error);
  EXPECT_THROW(ledger.record(ActionKind::kPlanned, -1e-9), std::logic_error);
  EXPECT_THROW(RiskLedger({-0.1, 0.0, 1}), std::invalid_argument);
}

TEST(Algorithms, NamesRoundTrip) {
  for (Algorithm a : {Algorithm::kRbRhc, Algorithm::kJccFh, Algorithm::kJccRhc,
                      Algorithm::kPclRhc}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_FALSE(parse_algorithm("rbrhc"));
}

TEST(Algorithms, ProblemFlags) {
  const auto rb = problem_options(Algorithm::kRbRhc);
  EXPECT_EQ(rb.first_step, UpdateRule::kOpenLoop);
  EXPECT_EQ(rb.later_steps, UpdateRule::kPcl);
  EXPECT_TRUE(rb.include_stop_risk);
  const auto jcc = problem_options(Algorithm::kJccRhc);
  EXPECT_EQ(jcc.later_steps, UpdateRule::kOpenLoop);
  EXPECT_FALSE(jcc.include_stop_risk);
  const auto pcl = problem_options(Algorithm::kPclRhc);
  EXPECT_EQ(pcl.first_step, UpdateRule::kPcl);
  EXPECT_FALSE(pcl.include_stop_risk);
}

struct Env {
  PlanningEnv env;
  Env(int agents) {
    const std::vector<Vec2> pts{Vec2(0, 0), Vec2(400, 0)};
    auto path = std::make_shared<ReferencePath>(ReferencePath::from_points(pts));
    env.lattice.s_res = 1.0;
    env.lattice.v_res = 1.0;
    env.lattice.horizon = 8;
    env.lattice.v_max = 4.0;
    env.lattice.accels = {-2.0, -1.0, 0.0, 1.0};
    env.belief_model.path = path;
    env.belief_model.process_noise(0, 0) = 0.05;
    env.collision = CollisionModel(path, VehicleBody::rectangle(4.0, 2.0),
                                   std::vector<VehicleBody>(agents, VehicleBody::rectangle(4.0, 2.0)));
    env.stop = StopParams::make(2.0, 4.0, 1.0);
    env.goal_s = 60.0;
  }
};

std::shared_ptr<const PredictedTrajectory> line(Vec2 start, Vec2 vel, double sigma, int steps) {
  auto t = std::make_shared<PredictedTrajectory>();
  for (int k = 0; k < steps; ++k) {
    const double sd = sigma * (1.0 + 0.1 * k);
    t->push_back({start + k * vel, sd * sd * Mat2::Identity(), std::atan2(vel.y(), vel.x())});
  }
  return t;
}

TEST(JccFh, AlphaOneIsUnconstrainedOptimum) {
  Env e(1);
  WorldBelief b;
  b.ego.mean = {0.0, 2.0};
  b.agents.push_back({{{1.0, line(Vec2(36, 4), Vec2(0, -1), 1.0, 40)}}});
  ProblemOptions o = problem_options(Algorithm::kJccFh);
  o.horizon = 8;
  const SpeedPlan free_plan = search_with_lambda(expand_graph(b, e.env, o), 0.0);
  // Summed per-step bounds can exceed 1; the fixture keeps the free plan below it.
  ASSERT_GT(free_plan.total_risk, 0.0);
  ASSERT_LE(free_plan.total_risk, 1.0);
  const auto plan = jcc_fh_plan(b, 1.0, e.env, 8);
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->controls, free_plan.controls);
}

TEST(JccFh, NoAgentsMatchesBudgetedFirstSolve) {
  Env e(0);
  WorldBelief b;
  b.ego.mean = {0.0, 1.0};
  const auto fh = jcc_fh_plan(b, 0.01, e.env, 8);
  ProblemOptions rb = problem_options(Algorithm::kRbRhc);
  rb.horizon = 8;
  const auto r = solve_chance_constrained(b, 0.01, e.env, rb);
  ASSERT_TRUE(fh && r.plan);
  EXPECT_EQ(fh->controls, r.plan->controls);
  EXPECT_EQ(fh->total_risk, 0.0);
}

TEST(JccRhc, AlphaOneIsGreedy) {
  Env e(1);
  WorldBelief b;
  b.ego.mean = {0.0, 2.0};
  b.agents.push_back({{{1.0, line(Vec2(12, 0), Vec2(0, 0), 0.5, 40)}}});
  const auto d = jcc_rhc_step(b, e.env, 1.0);
  const SpeedPlan free_plan =
      search_with_lambda(expand_graph(b, e.env, problem_options(Algorithm::kJccRhc)), 0.0);
  EXPECT_EQ(d.control, free_plan.controls.front());
}

TEST(JccRhc, RacetrackDrivesFastTwice) {
  const auto r = verify::racetrack_report();
  EXPECT_EQ(r.jcc_controls, (std::vector<int>{discrete::kFast, discrete::kFast}));
}

TEST(PclRhc, SinglePatternMatchesJcc) {
  Env e(1);
  WorldBelief b;
  b.ego.mean = {0.0, 3.0};
  b.agents.push_back({{{1.0, line(Vec2(25, 12), Vec2(0, -2), 0.7, 40)}}});
  for (double alpha : {0.001, 0.01, 0.1}) {
    const auto p = pcl_rhc_step(b, e.env, alpha);
    const auto j = jcc_rhc_step(b, e.env, alpha);
    EXPECT_EQ(p.control, j.control);
    EXPECT_EQ(p.kind, j.kind);
    EXPECT_EQ(p.planned_risk, j.planned_risk);
  }
}

TEST(PclRhc, NoAgentsMatchesJcc) {
  Env e(0);
  WorldBelief b;
  b.ego.mean = {0.0, 1.0};
  const auto p = pcl_rhc_step(b, e.env, 0.01);
  const auto j = jcc_rhc_step(b, e.env, 0.01);
  EXPECT_EQ(p.control, j.control);
}

TEST(PclRhc, SeparableObservationsLowerPlannedRisk) {
  // A crossing agent that either waits well away (dominant) or crosses in
  // front of the ego. Conditioning on the dominant mean discounts the crossing.
  Env e(1);
  WorldBelief b;
  b.ego.mean = {0.0, 2.0};
  AgentMixture mix;
  mix.patterns.push_back({0.6, line(Vec2(14, 40), Vec2(0, 0), 0.8, 40)});
  mix.patterns.push_back({0.4, line(Vec2(14, 10), Vec2(0, -2), 0.8, 40)});
  b.agents.push_back(mix);
  // Both update rules evaluated on the same fixed control sequence.
  WorldBelief bo = b;
  WorldBelief bp = b;
  double risk_ol = 0.0;
  double risk_pcl = 0.0;
  for (int k = 0; k < 8; ++k) {
    bo = open_loop_update(bo, 0.0, e.env.belief_model);
    bp = pcl_update(bp, 0.0, e.env.belief_model);
    risk_ol += g_b(bo, e.env.collision);
    risk_pcl += g_b(bp, e.env.collision);
  }
  EXPECT_GT(risk_ol, 0.0);
  EXPECT_LT(risk_pcl, risk_ol);
}

}  // namespace
}  // namespace rbrhc
