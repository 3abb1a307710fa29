#include "rbrhc/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/LU>

#include "rbrhc/errors.hpp"

namespace rbrhc {

bool is_stopped(const EgoBelief& ego) { return ego.mean.v == 0.0 && ego.cov(1, 1) == 0.0; }

const PredictedStep& AgentPattern::at(int step) const {
  if (!trajectory || step < 0 || static_cast<std::size_t>(step) >= trajectory->size()) {
    throw HorizonExhausted("agent prediction covers " + std::to_string(horizon()) +
                           " steps, step " + std::to_string(step) + " requested");
  }
  return (*trajectory)[static_cast<std::size_t>(step)];
}

double AgentMixture::weight_sum() const {
  double sum = 0.0;
  for (const auto& p : patterns) sum += p.weight;
  return sum;
}

std::size_t AgentMixture::dominant() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < patterns.size(); ++i) {
    if (patterns[i].weight > patterns[best].weight) best = i;
  }
  return best;
}

EgoBelief propagate_ego(const EgoBelief& ego, double accel, const BeliefModel& model) {
  EgoBelief next;
  next.mean = advance_on_path(ego.mean, accel, model.dt, *model.path);
  next.cov = ego.cov;
  const bool moved = ego.mean.v > 0.0 || next.mean.v > 0.0;
  if (moved) next.cov += model.process_noise * model.dt;
  if (next.mean.v == 0.0) {
    next.cov(1, 1) = 0.0;
    next.cov(0, 1) = 0.0;
    next.cov(1, 0) = 0.0;
  }
  return next;
}

WorldBelief open_loop_update(const WorldBelief& b, double accel, const BeliefModel& model) {
  WorldBelief next;
  next.ego = propagate_ego(b.ego, accel, model);
  next.agents = b.agents;
  next.step = b.step + 1;
  return next;
}

double log_gaussian_2d(const Vec2& x, const Vec2& mean, const Mat2& cov) {
  const double det = cov.determinant();
  const Vec2 d = x - mean;
  if (!(det > 1e-300)) {
    // Degenerate (deterministic) component: a point mass at the mean.
    return d.norm() < 1e-9 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double maha = d.dot(cov.inverse() * d);
  return -0.5 * maha - std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
}

AgentMixture reweight(const AgentMixture& mixture, int step, const Vec2& observed,
                      const Mat2& observation_noise) {
  const std::size_t n = mixture.patterns.size();
  std::vector<double> log_post(n, -std::numeric_limits<double>::infinity());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = mixture.patterns[i];
    if (!(p.weight > 0.0)) continue;
    const PredictedStep& st = p.at(step);
    log_post[i] = std::log(p.weight) + log_gaussian_2d(observed, st.mean, st.cov + observation_noise);
    max_log = std::max(max_log, log_post[i]);
  }
  double sum = 0.0;
  if (std::isfinite(max_log)) {
    for (double lp : log_post) sum += std::exp(lp - max_log);
  }
  const double log_total = std::isfinite(max_log) ? max_log + std::log(sum) : max_log;
  if (!(log_total >= std::log(1e-300))) {
    throw DegenerateObservation("observation at step " + std::to_string(step) +
                                " has negligible likelihood under every motion pattern");
  }
  AgentMixture out = mixture;
  for (std::size_t i = 0; i < n; ++i) {
    out.patterns[i].weight = std::exp(log_post[i] - log_total);
  }
  return out;
}

WorldBelief bayes_update(const WorldBelief& b, double accel, const Observation& y,
                         const BeliefModel& model) {
  (void)accel;  // ego is observed exactly; agents do not react to the ego
  WorldBelief next;
  next.step = b.step + 1;
  next.ego.mean = y.ego;
  next.ego.cov = model.ego_measurement_cov;
  if (y.ego.v == 0.0) {
    next.ego.cov(1, 1) = 0.0;
    next.ego.cov(0, 1) = next.ego.cov(1, 0) = 0.0;
  }
  next.agents.reserve(b.agents.size());
  for (std::size_t a = 0; a < b.agents.size(); ++a) {
    if (a < y.agents.size() && y.agents[a]) {
      next.agents.push_back(
          reweight(b.agents[a], next.step, *y.agents[a], model.agent_observation_noise));
    } else {
      next.agents.push_back(b.agents[a]);
    }
  }
  return next;
}

WorldBelief pcl_update(const WorldBelief& b, double accel, const BeliefModel& model) {
  WorldBelief next;
  next.ego = propagate_ego(b.ego, accel, model);
  next.step = b.step + 1;
  next.agents.reserve(b.agents.size());
  for (const auto& mixture : b.agents) {
    if (mixture.patterns.size() < 2) {
      next.agents.push_back(mixture);
      continue;
    }
    const Vec2 likely = mixture.patterns[mixture.dominant()].at(next.step).mean;
    next.agents.push_back(reweight(mixture, next.step, likely, model.agent_observation_noise));
  }
  return next;
}

}  // namespace rbrhc
