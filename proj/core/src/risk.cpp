#include "rbrhc/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rbrhc {

DiskCover cover_footprint(const FootprintSpec& fp, int n_disks) {
  if (n_disks < 1) throw std::invalid_argument("disk cover needs at least one disk");
  if (!(fp.length > 0.0) || !(fp.width > 0.0)) {
    throw std::invalid_argument("footprint dimensions must be positive");
  }
  DiskCover cover;
  cover.source = fp;
  const double slice = fp.length / n_disks;
  const double radius = std::hypot(0.5 * slice, 0.5 * fp.width);
  for (int i = 0; i < n_disks; ++i) {
    const double x = -0.5 * fp.length + slice * (i + 0.5);
    cover.disks.push_back({Vec2(x, 0.0), radius});
  }
  return cover;
}

double disk_collision_bound(const Vec2& mu1, const Mat2& sigma1, double r1, const Vec2& mu2,
                            const Mat2& sigma2, double r2) {
  const Vec2 diff = mu1 - mu2;
  const double dist = diff.norm();
  if (dist < 1e-9) return 1.0;
  const Vec2 e = diff / dist;
  const double var = e.dot((sigma1 + sigma2) * e);
  const double d = dist - r1 - r2;
  if (!(var > 0.0)) {
    if (d < 0.0) return 1.0;
    return d == 0.0 ? 0.5 : 0.0;
  }
  const double z = d / std::sqrt(2.0 * var);
  // For overlapping means the complement keeps the tail accurate near 1.
  const double p = z >= 0.0 ? 0.5 * std::erfc(z) : 1.0 - 0.5 * std::erfc(-z);
  return std::clamp(p, 0.0, 1.0);
}

std::vector<CollisionModel::PlacedCover> CollisionModel::covers_of(const VehicleBody& body, int n) {
  std::vector<PlacedCover> out;
  for (const auto& part : body.parts) {
    PlacedCover pc;
    pc.offset = part.offset;
    pc.disks = cover_footprint(part, n).disks;
    for (const auto& d : pc.disks) pc.radius = std::max(pc.radius, d.offset.norm() + d.radius);
    out.push_back(std::move(pc));
  }
  return out;
}

CollisionModel::CollisionModel(std::shared_ptr<const ReferencePath> path, VehicleBody ego,
                               std::vector<VehicleBody> agents, int disks_per_part,
                               bool passive_safety)
    : path_(std::move(path)),
      ego_(std::move(ego)),
      agents_(std::move(agents)),
      disks_per_part_(disks_per_part),
      passive_safety_(passive_safety) {
  if (!path_) throw std::invalid_argument("collision model needs a reference path");
  ego_covers_ = covers_of(ego_, disks_per_part_);
  for (const auto& a : agents_) agent_covers_.push_back(covers_of(a, disks_per_part_));
}

double CollisionModel::pattern_risk(double s, double s_var, std::size_t agent,
                                    const PredictedStep& pred) const {
  const auto& agent_parts = agent_covers_.at(agent);
  const Vec2 agent_axis(std::cos(pred.heading), std::sin(pred.heading));
  const Mat2 agent_rot = (Mat2() << agent_axis.x(), -agent_axis.y(), agent_axis.y(),
                          agent_axis.x()).finished();
  double sum = 0.0;
  for (const auto& ego_part : ego_covers_) {
    const Pose pose = pose_at_extended(*path_, s + ego_part.offset);
    const Vec2 t(std::cos(pose.heading), std::sin(pose.heading));
    const Mat2 ego_rot = (Mat2() << t.x(), -t.y(), t.y(), t.x()).finished();
    const Mat2 ego_cov = s_var * (t * t.transpose());
    const double sigma_max = std::sqrt((ego_cov + pred.cov).trace());
    for (const auto& agent_part : agent_parts) {
      const Vec2 agent_center = pred.mean + agent_part.offset * agent_axis;
      const double gap = (pose.position - agent_center).norm() - ego_part.radius - agent_part.radius;
      // Beyond 40 sigma every pair term underflows to exactly zero.
      if (gap > 40.0 * sigma_max) continue;
      for (const auto& de : ego_part.disks) {
        const Vec2 ce = pose.position + ego_rot * de.offset;
        for (const auto& da : agent_part.disks) {
          const Vec2 ca = agent_center + agent_rot * da.offset;
          sum += bound_(ce, ego_cov, de.radius, ca, pred.cov, da.radius);
        }
      }
    }
  }
  return sum;
}

double g_b(const WorldBelief& b, const CollisionModel& model) {
  if (model.passive_safety() && is_stopped(b.ego)) return 0.0;
  double total = 0.0;
  for (std::size_t a = 0; a < b.agents.size(); ++a) {
    for (const auto& pattern : b.agents[a].patterns) {
      const PredictedStep& pred = pattern.at(b.step);
      if (!(pattern.weight > 0.0)) continue;
      total += pattern.weight * model.pattern_risk(b.ego.mean.s, b.ego.cov(0, 0), a, pred);
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

WorldBelief f_stop_b(const WorldBelief& b, int tau, const BeliefModel& belief_model,
                     const StopParams& stop) {
  if (tau < 1) throw std::invalid_argument("stop rollout needs tau >= 1");
  WorldBelief cur = b;
  for (int t = 0; t < tau; ++t) cur = open_loop_update(cur, -stop.u_stop, belief_model);
  return cur;
}

double g_stop_b(const WorldBelief& b, const CollisionModel& model, const BeliefModel& belief_model,
                const StopParams& stop) {
  double total = 0.0;
  WorldBelief cur = b;
  for (int tau = 1; tau <= stop.t_stop; ++tau) {
    cur = open_loop_update(cur, -stop.u_stop, belief_model);
    total += g_b(cur, model);
  }
  return std::clamp(total, 0.0, 1.0);
}

StepRisk step_risk(const WorldBelief& b, const CollisionModel& model,
                   const BeliefModel& belief_model, const StopParams& stop, bool include_stop) {
  StepRisk r;
  r.g = g_b(b, model);
  if (include_stop) r.g_stop = g_stop_b(b, model, belief_model, stop);
  return r;
}

}  // namespace rbrhc
