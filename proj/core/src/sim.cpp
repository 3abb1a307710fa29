#include "rbrhc/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <thread>

#include "rbrhc/stats.hpp"

namespace rbrhc {

namespace {

enum class Stream : std::uint32_t { kGroundTruth = 1, kEgoNoise = 2, kObservation = 3 };

std::mt19937_64 make_stream(std::uint64_t seed, Stream purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

/// Lower Cholesky factor of a 2x2 PSD matrix; semidefinite inputs give a
/// factor with zero columns instead of failing.
Mat2 cholesky(const Mat2& c) {
  Mat2 l = Mat2::Zero();
  const double a = std::max(0.0, c(0, 0));
  l(0, 0) = std::sqrt(a);
  l(1, 0) = l(0, 0) > 0.0 ? c(1, 0) / l(0, 0) : 0.0;
  l(1, 1) = std::sqrt(std::max(0.0, c(1, 1) - l(1, 0) * l(1, 0)));
  return l;
}

}  // namespace

GroundTruth sample_ground_truth(const PreparedScenario& scenario, std::uint64_t seed,
                                double noise_scale) {
  const Scenario& sc = scenario.spec();
  std::mt19937_64 rng = make_stream(seed, Stream::kGroundTruth);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  GroundTruth gt;
  const double ds = normal(rng);
  const double dv = normal(rng);
  gt.ego_init.s = std::clamp(sc.ego.init.s + sc.ego.init_s_sd * ds, 0.0,
                             std::max(0.0, sc.ego.goal_s - 1e-6));
  gt.ego_init.v = std::clamp(sc.ego.init.v + sc.ego.init_v_sd * dv, 0.0, sc.ego.v_max);

  for (const AgentMixture& mixture : scenario.agent_priors()) {
    const double r = unif(rng);
    const Vec2 z(normal(rng), normal(rng));
    std::size_t chosen = mixture.patterns.size() - 1;
    double acc = 0.0;
    for (std::size_t p = 0; p < mixture.patterns.size(); ++p) {
      acc += mixture.patterns[p].weight;
      if (r < acc) {
        chosen = p;
        break;
      }
    }
    gt.pattern.push_back(chosen);
    const PredictedTrajectory& traj = *mixture.patterns[chosen].trajectory;
    std::vector<Pose> poses;
    poses.reserve(traj.size());
    for (const PredictedStep& st : traj) {
      poses.push_back({st.mean + noise_scale * (cholesky(st.cov) * z), st.heading});
    }
    gt.agent_poses.push_back(std::move(poses));
  }
  return gt;
}

EpisodeTrace run_episode(Algorithm algorithm, const PreparedScenario& scenario, const IRB& irb,
                         std::uint64_t seed, const EpisodeOptions& options) {
  const Scenario& sc = scenario.spec();
  const PlanningEnv& env = scenario.env();
  const ReferencePath& path = *scenario.path();
  const double dt = sc.dt;
  const double noise_scale = options.mode == SimMode::kModelMismatch ? options.mismatch_scale : 1.0;
  const GroundTruth gt = sample_ground_truth(scenario, seed, noise_scale);

  std::mt19937_64 ego_rng = make_stream(seed, Stream::kEgoNoise);
  std::mt19937_64 obs_rng = make_stream(seed, Stream::kObservation);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Mat2 obs_factor = cholesky(env.belief_model.agent_observation_noise);

  EpisodeTrace trace;
  WorldBelief b = scenario.initial_belief(gt.ego_init);
  EgoKinematicState ego = gt.ego_init;

  const double alpha = irb.total();
  const double per_iter_alpha = alpha * sc.N / sc.T;
  std::optional<RiskLedger> ledger;
  std::optional<LatticePlanner> planner;
  std::optional<SpeedPlan> open_loop_plan;
  if (algorithm == Algorithm::kRbRhc) {
    ledger.emplace(irb);
    planner.emplace(env, problem_options(Algorithm::kRbRhc));
  } else if (algorithm == Algorithm::kJccFh) {
    open_loop_plan = jcc_fh_plan(b, alpha, env, sc.T);
    if (!open_loop_plan) trace.infeasible_start = true;
  }

  double cost = 0.0;
  for (int k = 0; k < sc.T; ++k) {
    if (ego.s >= sc.ego.goal_s) {
      trace.reached_goal = true;
      break;
    }
    StepRecord rec;
    rec.step = k;
    StepDecision<double> d{0.0, ActionKind::kPlanned, 0.0, 0.0};
    switch (algorithm) {
      case Algorithm::kRbRhc: {
        rec.rho = ledger->budget();
        d = rbrhc_step(b, *ledger, *planner);
        trace.max_ledger_residual = std::max(trace.max_ledger_residual, ledger->identity_residual());
        if (ledger->total_subtracted() > irb.bound(k) + 1e-12) ++trace.budget_excursions;
        break;
      }
      case Algorithm::kJccRhc:
        d = jcc_rhc_step(b, env, per_iter_alpha);
        break;
      case Algorithm::kPclRhc:
        d = pcl_rhc_step(b, env, per_iter_alpha);
        break;
      case Algorithm::kJccFh: {
        if (open_loop_plan) {
          const auto idx = static_cast<std::size_t>(k);
          d.control = idx < open_loop_plan->controls.size() ? open_loop_plan->controls[idx] : 0.0;
          d.planned_risk = k == 0 ? open_loop_plan->total_risk : 0.0;
        } else if (is_stopped(b.ego)) {
          d = {0.0, ActionKind::kNoOp, 0.0, 0.0};
        } else {
          d = {-env.stop.u_stop, ActionKind::kEmergencyStop, 0.0, 0.0};
        }
        break;
      }
    }
    if (algorithm != Algorithm::kRbRhc) rec.rho = std::numeric_limits<double>::quiet_NaN();
    if (k == 0 && algorithm != Algorithm::kJccFh && d.kind != ActionKind::kPlanned) {
      trace.infeasible_start = true;
    }
    const double u = std::min(d.control, (env.lattice.v_max - ego.v) / dt);
    rec.control = u;
    rec.kind = d.kind;
    rec.planned_risk = d.planned_risk;

    // Realized tracking error; drawn every step so streams stay aligned
    // across algorithms.
    const double ns = normal(ego_rng);
    const double nv = normal(ego_rng);
    const EgoKinematicState nominal = advance_on_path(ego, u, dt, path);
    EgoKinematicState next = nominal;
    const bool moved = ego.v > 0.0 || nominal.v > 0.0;
    if (moved) {
      next.s = std::clamp(next.s + sc.process_noise_s * std::sqrt(dt) * ns, 0.0, path.length());
    }
    if (nominal.v > 0.0) {
      next.v = std::clamp(next.v + sc.process_noise_v * std::sqrt(dt) * nv, 0.0, sc.ego.v_max);
    }

    const bool reached = next.s >= sc.ego.goal_s;
    double step_cost = dt;
    if (reached) {
      const double t = time_to_reach(ego, u, dt, sc.ego.goal_s);
      step_cost = t >= 0.0 ? t : dt;
    }
    rec.cost = step_cost;
    cost += step_cost;

    const Pose ego_pose = pose_at_extended(path, next.s);
    const auto ego_rects = body_on_path(sc.ego.body, path, next.s);
    double min_dist = std::numeric_limits<double>::infinity();
    bool collided = false;
    Observation y;
    y.ego = next;
    for (std::size_t a = 0; a < gt.agent_poses.size(); ++a) {
      const Pose& agent_pose = gt.agent_poses[a][static_cast<std::size_t>(k) + 1];
      min_dist = std::min(min_dist, (agent_pose.position - ego_pose.position).norm());
      if (next.v > 0.0 || !sc.passive_safety) {
        for (const auto& ar : body_at_pose(sc.agents[a].body, agent_pose)) {
          for (const auto& er : ego_rects) collided = collided || rectangles_overlap(er, ar);
        }
      }
      const Vec2 noise(normal(obs_rng), normal(obs_rng));
      y.agents.emplace_back(agent_pose.position + obs_factor * noise);
    }
    rec.ego = next;
    rec.min_agent_distance = gt.agent_poses.empty() ? 0.0 : min_dist;
    rec.collided = collided;
    trace.steps.push_back(rec);
    ego = next;
    if (collided) {
      trace.collided = true;
      break;
    }
    if (reached) {
      trace.reached_goal = true;
      break;
    }
    b = bayes_update(b, u, y, env.belief_model);
  }
  if (!trace.reached_goal) cost += std::max(0.0, sc.ego.goal_s - ego.s) / sc.ego.v_max;
  trace.total_cost = cost;
  return trace;
}

AlgorithmSummary summarize(Algorithm algorithm, const std::vector<TrialResult>& trials) {
  AlgorithmSummary s;
  s.algorithm = algorithm;
  std::vector<double> costs;
  for (const auto& t : trials) {
    if (t.algorithm != algorithm) continue;
    ++s.trials;
    if (!t.error.empty()) {
      ++s.errors;
      continue;
    }
    if (t.collided) ++s.collisions;
    if (t.infeasible_start) ++s.infeasible_starts;
    s.max_ledger_residual = std::max(s.max_ledger_residual, t.max_ledger_residual);
    s.budget_excursions += t.budget_excursions;
    costs.push_back(t.cost);
  }
  const long valid = s.trials - s.errors;
  if (valid > 0) {
    s.collision_rate = static_cast<double>(s.collisions) / static_cast<double>(valid);
    s.collision_rate_se = stats::binomial_se(s.collisions, valid);
    const auto w = stats::wilson_interval(s.collisions, valid);
    s.wilson_lo = w.lo;
    s.wilson_hi = w.hi;
    s.mean_cost = stats::mean(costs);
    s.cost_se = stats::standard_error(costs);
  }
  return s;
}

MonteCarloResult run_monte_carlo(const PreparedScenario& scenario,
                                 const std::vector<Algorithm>& algorithms, const IRB& irb, int M,
                                 std::uint64_t base_seed, const MonteCarloOptions& options) {
  if (M < 1) throw std::invalid_argument("Monte Carlo needs at least one trial");
  MonteCarloResult result;
  const std::size_t n_alg = algorithms.size();
  const std::size_t n_tasks = static_cast<std::size_t>(M) * n_alg;
  result.trials.resize(n_tasks);

  const auto run_task = [&](std::size_t i) {
    TrialResult& t = result.trials[i];
    t.seed = base_seed + i / n_alg;
    t.algorithm = algorithms[i % n_alg];
    try {
      const EpisodeTrace tr = run_episode(t.algorithm, scenario, irb, t.seed, options.episode);
      t.collided = tr.collided;
      t.cost = tr.total_cost;
      t.steps = static_cast<int>(tr.steps.size());
      t.reached_goal = tr.reached_goal;
      t.infeasible_start = tr.infeasible_start;
      t.max_ledger_residual = tr.max_ledger_residual;
      t.budget_excursions = tr.budget_excursions;
      for (const auto& s : tr.steps) {
        t.rho.push_back(s.rho);
        t.planned_risk.push_back(s.planned_risk);
        t.min_agent_distance.push_back(s.min_agent_distance);
      }
    } catch (const std::exception& e) {
      t.error = e.what();
    }
  };

  const int threads = std::max(1, options.threads);
  if (threads == 1 || n_tasks < 2) {
    for (std::size_t i = 0; i < n_tasks; ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n_tasks; i = next++) run_task(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (Algorithm a : algorithms) {
    AlgorithmSummary s = summarize(a, result.trials);
    if (static_cast<double>(s.errors) > 0.01 * static_cast<double>(s.trials)) result.failed = true;
    result.summaries.push_back(s);
  }
  return result;
}

}  // namespace rbrhc
