#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rbrhc/vehicle_models.hpp"

namespace rbrhc {

/// Gaussian belief over the ego's longitudinal state (s, v).
struct EgoBelief {
  EgoKinematicState mean;
  Mat2 cov = Mat2::Zero();
};

/// Ego belief with deterministic zero velocity (the stopped set).
bool is_stopped(const EgoBelief& ego);

/// One step of a predicted agent trajectory.
struct PredictedStep {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Zero();
  double heading = 0.0;
};

using PredictedTrajectory = std::vector<PredictedStep>;

/// A motion pattern: prior-independent per-step Gaussian marginals. The
/// trajectory is shared between beliefs since it never changes.
struct AgentPattern {
  double weight = 1.0;
  std::shared_ptr<const PredictedTrajectory> trajectory;

  const PredictedStep& at(int step) const;
  std::size_t horizon() const { return trajectory ? trajectory->size() : 0; }
};

/// Mixture over an agent's motion patterns.
struct AgentMixture {
  std::vector<AgentPattern> patterns;

  double weight_sum() const;
  /// Index of the highest-weight pattern; ties go to the lowest index.
  std::size_t dominant() const;
};

struct WorldBelief {
  EgoBelief ego;
  std::vector<AgentMixture> agents;
  int step = 0;
};

/// Parameters shared by every belief update.
struct BeliefModel {
  std::shared_ptr<const ReferencePath> path;
  double dt = 1.0;
  /// Ego tracking-error covariance per second over (s, v).
  Mat2 process_noise = Mat2::Zero();
  /// Covariance of the ego state after an exact observation.
  Mat2 ego_measurement_cov = Mat2::Zero();
  /// Additive noise on observed agent positions.
  Mat2 agent_observation_noise = Mat2::Identity() * 0.25;
};

struct Observation {
  EgoKinematicState ego;
  /// Observed position per agent; nullopt when the agent is not observed.
  std::vector<std::optional<Vec2>> agents;
};

/// Open-loop (unobservable) propagation: ego mean by advance_on_path,
/// covariance grown by Q*dt while moving, velocity collapsed to exactly zero
/// once the nominal speed reaches zero; agent weights unchanged.
WorldBelief open_loop_update(const WorldBelief& b, double accel, const BeliefModel& model);

/// Ego propagation only (the agent part of open_loop_update is a step shift).
EgoBelief propagate_ego(const EgoBelief& ego, double accel, const BeliefModel& model);

/// Bayesian filtering with an exact ego observation and noisy agent
/// positions. Throws DegenerateObservation when every pattern of an agent
/// assigns the observation total likelihood below 1e-300.
WorldBelief bayes_update(const WorldBelief& b, double accel, const Observation& y,
                         const BeliefModel& model);

/// Partially-closed-loop update: agent weights are conditioned on the
/// most likely observation, the mean of each agent's dominant pattern.
WorldBelief pcl_update(const WorldBelief& b, double accel, const BeliefModel& model);

/// Reweights one mixture by the likelihood of `observed` at `step`.
AgentMixture reweight(const AgentMixture& mixture, int step, const Vec2& observed,
                      const Mat2& observation_noise);

/// Gaussian density of x under N(mean, cov) in two dimensions, in log space.
double log_gaussian_2d(const Vec2& x, const Vec2& mean, const Mat2& cov);

}  // namespace rbrhc
