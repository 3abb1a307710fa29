#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "rbrhc/errors.hpp"
#include "rbrhc/scenario.hpp"
#include "rbrhc/sim.hpp"
#include "rbrhc/stats.hpp"

namespace rbrhc {
namespace {

IRB irb_of(const Scenario& sc) { return {sc.rho0, sc.delta, sc.T}; }

TEST(GroundTruth, ZeroSpreadSinglePatternFollowsMeans) {
  Scenario sc = builtin_scenario("exp1");
  sc.agents[0].patterns[0].sigma0 = 0.0;
  sc.agents[0].patterns[0].sigma_rate = 0.0;
  sc.ego.init_s_sd = 0.0;
  const PreparedScenario p(sc);
  const GroundTruth gt = sample_ground_truth(p, 17);
  const auto& traj = *p.agent_priors()[0].patterns[0].trajectory;
  ASSERT_EQ(gt.agent_poses[0].size(), traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    EXPECT_EQ(gt.agent_poses[0][k].position, traj[k].mean);
  }
  EXPECT_EQ(gt.ego_init, sc.ego.init);
}

TEST(GroundTruth, SameSeedSameDraw) {
  const PreparedScenario p(builtin_scenario("exp2"));
  const GroundTruth a = sample_ground_truth(p, 5);
  const GroundTruth b = sample_ground_truth(p, 5);
  EXPECT_EQ(a.pattern, b.pattern);
  EXPECT_EQ(a.ego_init, b.ego_init);
  for (std::size_t i = 0; i < a.agent_poses.size(); ++i) {
    for (std::size_t k = 0; k < a.agent_poses[i].size(); ++k) {
      EXPECT_EQ(a.agent_poses[i][k].position, b.agent_poses[i][k].position);
    }
  }
}

TEST(GroundTruth, PatternFrequencyMatchesWeights) {
  const PreparedScenario p(builtin_scenario("exp2"));
  const int n = 10000;
  long first = 0;
  for (int seed = 0; seed < n; ++seed) {
    if (sample_ground_truth(p, static_cast<std::uint64_t>(seed)).pattern[1] == 0) ++first;
  }
  const double freq = static_cast<double>(first) / n;
  const double se = std::sqrt(0.7 * 0.3 / n);
  EXPECT_NEAR(freq, 0.7, 3.0 * se);
}

// Normal CDF on cell edges against a histogram of realized deviations.
TEST(GroundTruth, StepMarginalsMatchPredictionInTotalVariation) {
  const PreparedScenario p(builtin_scenario("exp1"));
  const auto& traj = *p.agent_priors()[0].patterns[0].trajectory;
  const int cells = 50;
  const double span = 4.0;
  const int n = 20000;
  for (std::size_t step : {std::size_t{3}, std::size_t{12}, std::size_t{24}}) {
    const double sd = std::sqrt(traj[step].cov(0, 0));
    std::vector<double> hist(cells, 0.0);
    for (int seed = 0; seed < n; ++seed) {
      const GroundTruth gt = sample_ground_truth(p, static_cast<std::uint64_t>(seed) + 1000);
      const double z = (gt.agent_poses[0][step].position.x() - traj[step].mean.x()) / sd;
      const int cell = static_cast<int>(std::floor((z + span) / (2.0 * span) * cells));
      if (cell >= 0 && cell < cells) hist[static_cast<std::size_t>(cell)] += 1.0 / n;
    }
    double tv = 0.0;
    double inside = 0.0;
    for (int c = 0; c < cells; ++c) {
      const double lo = -span + 2.0 * span * c / cells;
      const double hi = lo + 2.0 * span / cells;
      const double pc = 0.5 * (std::erfc(-hi / std::numbers::sqrt2) - std::erfc(-lo / std::numbers::sqrt2));
      tv += std::abs(hist[static_cast<std::size_t>(c)] - pc);
      inside += pc;
    }
    tv = 0.5 * (tv + (1.0 - inside));
    EXPECT_LE(tv, 0.10) << "step " << step;
  }
}

TEST(Episode, ClearRoadIsCollisionFreeAndCostsTraversalTime) {
  const PreparedScenario p(builtin_scenario("clear_road"));
  for (Algorithm a : {Algorithm::kRbRhc, Algorithm::kJccRhc, Algorithm::kPclRhc,
                      Algorithm::kJccFh}) {
    const EpisodeTrace t = run_episode(a, p, irb_of(p.spec()), 3);
    EXPECT_FALSE(t.collided);
    EXPECT_TRUE(t.reached_goal);
    double sum = 0.0;
    for (const auto& s : t.steps) sum += s.cost;
    EXPECT_DOUBLE_EQ(t.total_cost, sum);
    // Fastest profile: accelerate at 1 m/s^2 to 6 m/s, then cruise to 100 m.
    EXPECT_NEAR(t.total_cost, 6.0 + 82.0 / 6.0, 0.5) << to_string(a);
  }
}

TEST(Episode, FixedSeedIsBitIdentical) {
  const PreparedScenario p(builtin_scenario("adversarial_crossing"));
  for (Algorithm a : {Algorithm::kRbRhc, Algorithm::kPclRhc}) {
    const EpisodeTrace x = run_episode(a, p, irb_of(p.spec()), 11);
    const EpisodeTrace y = run_episode(a, p, irb_of(p.spec()), 11);
    ASSERT_EQ(x.steps.size(), y.steps.size());
    EXPECT_EQ(x.total_cost, y.total_cost);
    for (std::size_t k = 0; k < x.steps.size(); ++k) {
      EXPECT_EQ(x.steps[k].control, y.steps[k].control);
      EXPECT_EQ(x.steps[k].ego, y.steps[k].ego);
      EXPECT_EQ(x.steps[k].planned_risk, y.steps[k].planned_risk);
      EXPECT_EQ(std::isnan(x.steps[k].rho), std::isnan(y.steps[k].rho));
      if (!std::isnan(x.steps[k].rho)) EXPECT_EQ(x.steps[k].rho, y.steps[k].rho);
    }
  }
}

TEST(Episode, BudgetLedgerIdentityHolds) {
  const PreparedScenario p(builtin_scenario("adversarial_crossing"));
  const IRB irb{0.01, 0.001, p.spec().T};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const EpisodeTrace t = run_episode(Algorithm::kRbRhc, p, irb, seed);
    EXPECT_LE(t.max_ledger_residual, 1e-12);
    EXPECT_EQ(t.budget_excursions, 0);
    for (const auto& s : t.steps) EXPECT_LE(s.rho, irb.bound(s.step) + 1e-12);
  }
}

TEST(MonteCarlo, SingleClearTrial) {
  const PreparedScenario p(builtin_scenario("clear_road"));
  const auto r = run_monte_carlo(p, {Algorithm::kRbRhc}, irb_of(p.spec()), 1, 1);
  ASSERT_EQ(r.summaries.size(), 1u);
  EXPECT_EQ(r.summaries[0].collisions, 0);
  EXPECT_EQ(r.summaries[0].collision_rate, 0.0);
  EXPECT_FALSE(r.failed);
}

TEST(MonteCarlo, PairedTrialsShareSeedsAndOrder) {
  const PreparedScenario p(builtin_scenario("adversarial_crossing"));
  const std::vector<Algorithm> algs{Algorithm::kPclRhc, Algorithm::kRbRhc};
  const auto r = run_monte_carlo(p, algs, irb_of(p.spec()), 4, 100);
  ASSERT_EQ(r.trials.size(), 8u);
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    EXPECT_EQ(r.trials[i].seed, 100 + i / 2);
    EXPECT_EQ(r.trials[i].algorithm, algs[i % 2]);
  }
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  const PreparedScenario p(builtin_scenario("adversarial_crossing"));
  MonteCarloOptions one;
  MonteCarloOptions four;
  four.threads = 4;
  const auto a = run_monte_carlo(p, {Algorithm::kRbRhc}, irb_of(p.spec()), 6, 7, one);
  const auto b = run_monte_carlo(p, {Algorithm::kRbRhc}, irb_of(p.spec()), 6, 7, four);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].cost, b.trials[i].cost);
    EXPECT_EQ(a.trials[i].collided, b.trials[i].collided);
    EXPECT_EQ(a.trials[i].planned_risk, b.trials[i].planned_risk);
  }
}

TEST(Scenarios, BuiltinDefaults) {
  const Scenario e1 = builtin_scenario("exp1");
  EXPECT_EQ(e1.T, 25);
  EXPECT_EQ(e1.N, 25);
  EXPECT_EQ(e1.dt, 1.0);
  EXPECT_EQ(e1.rho0, 0.01);
  EXPECT_EQ(e1.delta, 0.0);
  EXPECT_EQ(e1.ego.body.parts[0].length, 12.6);
  EXPECT_EQ(e1.ego.body.parts[0].width, 2.4);

  const Scenario e2 = builtin_scenario("exp2_three_vehicle");
  ASSERT_EQ(e2.agents.size(), 2u);
  ASSERT_EQ(e2.agents[1].patterns.size(), 2u);
  EXPECT_EQ(e2.agents[1].patterns[0].weight, 0.7);
  EXPECT_EQ(e2.agents[1].patterns[1].weight, 0.3);
  ASSERT_EQ(e2.ego.body.parts.size(), 2u);
  EXPECT_EQ(e2.ego.body.parts[0].length, 5.0);
  EXPECT_EQ(e2.ego.body.parts[0].width, 2.5);
  EXPECT_EQ(e2.ego.body.parts[1].length, 12.5);
  EXPECT_EQ(e2.ego.body.parts[1].width, 2.4);

  EXPECT_THROW(builtin_scenario("exp3"), ConfigError);
  EXPECT_EQ(builtin_scenarios().size(), 4u);
}

TEST(Scenarios, PredictionCoversHorizonPlusStop) {
  const PreparedScenario p(builtin_scenario("exp1"));
  const int t_stop = p.env().stop.t_stop;
  EXPECT_EQ(p.prediction_steps(), p.spec().T + p.spec().N + t_stop + 1);
  for (const auto& m : p.agent_priors()) {
    for (const auto& pat : m.patterns) {
      EXPECT_GE(static_cast<int>(pat.horizon()), p.spec().N + t_stop);
    }
  }
}

}  // namespace
}  // namespace rbrhc
