#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "rbrhc/discrete_oracle.hpp"
#include "rbrhc/errors.hpp"
#include "rbrhc/verify.hpp"

namespace rbrhc::discrete {
namespace {

// Fills the bookkeeping fields of a small hand-written model.
Model finish(Model m, std::size_t n_obs = 1) {
  const std::size_t n = m.states.size();
  if (m.observations.empty()) {
    for (std::size_t y = 0; y < n_obs; ++y) m.observations.push_back("y" + std::to_string(y));
  }
  if (m.observation.empty()) m.observation.assign(n, std::vector<double>(m.observations.size(), 0.0));
  for (auto& row : m.observation) {
    if (std::accumulate(row.begin(), row.end(), 0.0) == 0.0) row[0] = 1.0;
  }
  if (m.stopped.empty()) m.stopped.assign(n, false);
  if (m.stage_cost.empty()) m.stage_cost.assign(n, std::vector<double>(m.controls.size(), 0.0));
  m.validate();
  return m;
}

/// ok --(p)--> crash, crash absorbing; a single control.
Model leaky_chain(double p, int horizon) {
  Model m;
  m.states = {"ok", "crash"};
  m.controls = {"go"};
  m.collision = {false, true};
  m.transition = {{{1.0 - p, p}, {0.0, 1.0}}};
  m.initial = {1.0, 0.0};
  m.horizon = horizon;
  return finish(m);
}

TEST(OpenLoop, ThreeStateMatrixVector) {
  Model m;
  m.states = {"a", "b", "c"};
  m.controls = {"u"};
  m.collision = {false, false, false};
  m.transition = {{{0.5, 0.3, 0.2}, {0.1, 0.8, 0.1}, {0.0, 0.25, 0.75}}};
  m.initial = {0.2, 0.5, 0.3};
  m = finish(m);
  // Hand product: b' = b^T P.
  // a: 0.2*0.5 + 0.5*0.1 + 0.3*0   = 0.15
  // b: 0.2*0.3 + 0.5*0.8 + 0.3*.25 = 0.535
  // c: 0.2*0.2 + 0.5*0.1 + 0.3*.75 = 0.315
  const Belief next = open_loop_update(m, m.initial, 0);
  EXPECT_NEAR(next[0], 0.15, 1e-15);
  EXPECT_NEAR(next[1], 0.535, 1e-15);
  EXPECT_NEAR(next[2], 0.315, 1e-15);
}

TEST(Racetrack, SequenceRisks) {
  const Model m = racetrack_model();
  const auto risk = [&](std::vector<int> us) {
    SequencePolicy p(std::move(us));
    return exact_policy_risk(m, p).exact;
  };
  EXPECT_NEAR(risk({kFast, kFast}), 0.19, 1e-12);
  EXPECT_NEAR(risk({kSlow, kFast}), 0.1, 1e-12);
  EXPECT_NEAR(risk({kFast, kSlow}), 0.1, 1e-12);
  EXPECT_EQ(risk({kSlow, kSlow}), 0.0);
}

TEST(Racetrack, SurvivalProductCrossCheck) {
  const Model m = racetrack_model();
  SequencePolicy p({kFast, kFast});
  const PolicyRisk r = exact_policy_risk(m, p);
  EXPECT_NEAR(r.exact, 1.0 - 0.9 * 0.9, 1e-15);
  EXPECT_NEAR(r.per_step_sum, 0.1 + 0.9 * 0.1, 1e-15);
}

TEST(Racetrack, JointConstraintReplanningExceedsItsBound) {
  const auto r = verify::racetrack_report();
  EXPECT_NEAR(r.jcc_planned_bound, 0.1, 1e-12);
  EXPECT_NEAR(r.jcc_exact, 0.19, 1e-12);
  EXPECT_LT(r.seconds, 1.0);
}

TEST(Racetrack, BudgetForcesSlowSecondCurve) {
  const auto r = verify::racetrack_report();
  EXPECT_LE(r.rb_exact, 0.1 + 1e-12);
  EXPECT_EQ(r.rb_controls, (std::vector<int>{kFast, kSlow}));
  ASSERT_EQ(r.rb_subtracted.size(), 2u);
  EXPECT_NEAR(r.rb_subtracted[0], 0.1, 1e-12);
  EXPECT_EQ(r.rb_subtracted[1], 0.0);
}

TEST(Racetrack, OpenLoopFastThenSlow) {
  const auto c = umdp_transform_check(racetrack_model(), {kFast, kSlow});
  EXPECT_NEAR(c.bound, 0.1, 1e-15);
  EXPECT_NEAR(c.exact, 0.1, 1e-15);
}

TEST(ExactRisk, SingleStepCollisionMass) {
  const Model m = leaky_chain(0.037, 1);
  SequencePolicy p({0});
  EXPECT_NEAR(exact_policy_risk(m, p).exact, 0.037, 1e-15);
}

TEST(ExactRisk, NodeCapThrows) {
  const Model m = racetrack_model();
  SequencePolicy p({kFast, kFast});
  EXPECT_THROW(exact_policy_risk(m, p, 1), InstanceTooLarge);
}

TEST(Umdp, DeterministicSafeSequence) {
  const auto c = umdp_transform_check(leaky_chain(0.0, 3), {0, 0, 0});
  EXPECT_EQ(c.bound, 0.0);
  EXPECT_EQ(c.exact, 0.0);
}

TEST(Umdp, OverlappingEventsGiveStrictBound) {
  // Absorbing crash: the same event is counted at every later step. Enumerated
  // outcome tree: P(no crash in 3 steps) = 0.9^3.
  const auto c = umdp_transform_check(leaky_chain(0.1, 3), {0, 0, 0});
  EXPECT_NEAR(c.exact, 1.0 - 0.729, 1e-15);
  EXPECT_NEAR(c.bound, 0.1 + 0.19 + 0.271, 1e-15);
  EXPECT_GT(c.bound, c.exact);
}

TEST(GStop, TwoStepHandSum) {
  Model m;
  m.states = {"m0", "m1", "stopped", "crash", "wreck"};
  m.controls = {"brake"};
  m.collision = {false, false, false, true, false};
  const double p2 = 0.02 / 0.99;
  m.transition = {{{0, 0.99, 0, 0.01, 0},
                   {0, 0, 1.0 - p2, p2, 0},
                   {0, 0, 1, 0, 0},
                   {0, 0, 0, 0, 1},
                   {0, 0, 0, 0, 1}}};
  m.initial = {1, 0, 0, 0, 0};
  m.t_stop = 2;
  m = finish(m);
  EXPECT_NEAR(g_stop_b(m, m.initial), 0.03, 1e-15);
}

TEST(Bayes, RacetrackCrashObservation) {
  const Model m = racetrack_model();
  const Belief safe = bayes_update(m, m.initial, kFast, 1);
  EXPECT_NEAR(safe[1], 1.0, 1e-15);
  const Belief crash = bayes_update(m, m.initial, kFast, 0);
  EXPECT_NEAR(crash[3], 1.0, 1e-15);
  EXPECT_THROW(bayes_update(m, m.initial, kSlow, 0), DegenerateObservation);
  // Most likely observation after fast is "safe".
  EXPECT_EQ(pcl_update(m, m.initial, kFast), safe);
}

TEST(Validate, RejectsNonStochasticRows) {
  Model m = leaky_chain(0.1, 2);
  m.transition[0][0] = {0.5, 0.4};
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

struct Brute {
  double cost;
  double risk;
  std::vector<int> seq;
};

// Independent enumeration of open-loop sequences without stop risk.
std::optional<Brute> brute_force(const Model& m, int h, double rho) {
  std::optional<Brute> best;
  std::vector<int> seq;
  std::function<void(const Belief&, double, std::vector<double>&)> rec =
      [&](const Belief& b, double cost, std::vector<double>& risks) {
        if (static_cast<int>(seq.size()) == h) {
          double r = 0.0;
          for (auto it = risks.rbegin(); it != risks.rend(); ++it) r = *it + r;
          if (r <= rho && (!best || cost < best->cost)) best = Brute{cost, r, seq};
          return;
        }
        for (int u = 0; u < m.n_controls(); ++u) {
          double c = 0.0;
          for (std::size_t x = 0; x < b.size(); ++x) c += b[x] * m.stage_cost[x][static_cast<std::size_t>(u)];
          Belief next(b.size(), 0.0);
          for (std::size_t x = 0; x < b.size(); ++x) {
            for (std::size_t y = 0; y < b.size(); ++y) next[y] += b[x] * m.transition[static_cast<std::size_t>(u)][x][y];
          }
          double g = 0.0;
          for (std::size_t x = 0; x < b.size(); ++x) {
            if (m.collision[x]) g += next[x];
          }
          seq.push_back(u);
          risks.push_back(g);
          rec(next, cost + c, risks);
          risks.pop_back();
          seq.pop_back();
        }
      };
  std::vector<double> risks;
  rec(m.initial, 0.0, risks);
  return best;
}

TEST(SolveSequences, MatchesBruteForceOnRandomModels) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const RandomInstance inst = random_instance(seed);
    const Model& m = inst.model;
    for (double rho : {0.0, 0.01, 0.05, 0.2}) {
      SearchOptions o;
      o.horizon = m.horizon;
      const auto got = solve_sequences(m, m.initial, 0, rho, o);
      const auto want = brute_force(m, m.horizon, rho);
      ASSERT_EQ(got.has_value(), want.has_value()) << "seed " << seed << " rho " << rho;
      if (!got) continue;
      EXPECT_EQ(got->controls, want->seq);
      EXPECT_NEAR(got->cost, want->cost, 1e-12);
      EXPECT_LE(got->total_risk, rho);
    }
  }
}

TEST(Corpus, GuaranteeBooleAndUmdpHold) {
  const auto corpus = verify::discrete_corpus(20, 99);
  EXPECT_EQ(corpus.guarantee_violations, 0);
  EXPECT_EQ(corpus.boole_violations, 0);
  EXPECT_EQ(corpus.umdp_violations, 0);
  for (const auto& e : corpus.entries) {
    EXPECT_LE(e.states, 8);
    EXPECT_LE(e.horizon, 6);
    EXPECT_GE(e.budget.exact, 0.0);
    EXPECT_LE(e.budget.exact, 1.0);
  }
}

TEST(RandomInstance, Deterministic) {
  const auto a = random_instance(12);
  const auto b = random_instance(12);
  EXPECT_EQ(a.model.transition, b.model.transition);
  EXPECT_EQ(a.irb.rho0, b.irb.rho0);
  EXPECT_EQ(a.irb.T, a.model.horizon);
}

}  // namespace
}  // namespace rbrhc::discrete
