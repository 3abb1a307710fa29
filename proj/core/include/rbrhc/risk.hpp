#pragma once

#include <memory>
#include <vector>

#include "rbrhc/belief.hpp"
#include "rbrhc/vehicle_models.hpp"

namespace rbrhc {

/// Disk in a footprint's body frame (x forward, y left).
struct Disk {
  Vec2 offset = Vec2::Zero();
  double radius = 0.0;
};

struct DiskCover {
  std::vector<Disk> disks;
  FootprintSpec source;
};

/// n equal disks along the long axis of the rectangle. Disk i covers the
/// slice of length L/n around its center; radius is the half-diagonal of that
/// slice. The returned offsets are relative to the footprint center.
DiskCover cover_footprint(const FootprintSpec& fp, int n_disks);

/// Upper bound on P(two disks with Gaussian centers overlap):
/// 0.5 * erfc(d / (sqrt(2) sigma)), d = |mu1 - mu2| - r1 - r2, sigma^2 the
/// variance of the center offset along the mean center line.
/// Returns 1 for coincident means.
double disk_collision_bound(const Vec2& mu1, const Mat2& sigma1, double r1, const Vec2& mu2,
                            const Mat2& sigma2, double r2);

using DiskBoundFn = double (*)(const Vec2&, const Mat2&, double, const Vec2&, const Mat2&, double);

/// Collision geometry shared by all risk evaluations. Every rectangle of
/// the ego body and of each agent body is covered by `disks_per_part` disks.
class CollisionModel {
 public:
  CollisionModel() = default;
  CollisionModel(std::shared_ptr<const ReferencePath> path, VehicleBody ego,
                 std::vector<VehicleBody> agents, int disks_per_part = 3,
                 bool passive_safety = true);

  const ReferencePath& path() const { return *path_; }
  const VehicleBody& ego_body() const { return ego_; }
  const std::vector<VehicleBody>& agent_bodies() const { return agents_; }
  int disks_per_part() const { return disks_per_part_; }
  bool passive_safety() const { return passive_safety_; }

  /// Sum over ego/agent disk pairs of the disk bound for one agent pattern
  /// step, with the ego at arc length s and position variance `s_var`
  /// along the path tangent. Not clamped.
  double pattern_risk(double s, double s_var, std::size_t agent, const PredictedStep& pred) const;

  /// Replaces the disk bound (used to run oracle checks against mutants).
  void set_disk_bound(DiskBoundFn fn) { bound_ = fn; }

 private:
  struct PlacedCover {
    double offset = 0.0;  ///< part offset along the body axis
    std::vector<Disk> disks;
    double radius = 0.0;  ///< bounding radius of the part's disks about the part center
  };

  static std::vector<PlacedCover> covers_of(const VehicleBody& body, int n);

  std::shared_ptr<const ReferencePath> path_;
  VehicleBody ego_;
  std::vector<VehicleBody> agents_;
  int disks_per_part_ = 3;
  bool passive_safety_ = true;
  std::vector<PlacedCover> ego_covers_;
  std::vector<std::vector<PlacedCover>> agent_covers_;
  DiskBoundFn bound_ = &disk_collision_bound;
};

/// Collision probability bound of a belief: zero in the stopped set,
/// otherwise the weight-weighted Boole sum over agents, patterns and disk
/// pairs, clamped to [0, 1]. Throws HorizonExhausted when a pattern does not
/// cover b.step.
double g_b(const WorldBelief& b, const CollisionModel& model);

/// Belief after tau open-loop steps of -u_stop.
WorldBelief f_stop_b(const WorldBelief& b, int tau, const BeliefModel& belief_model,
                     const StopParams& stop);

/// Sum of g_b over the t_stop-step emergency-stop rollout, clamped to [0, 1].
double g_stop_b(const WorldBelief& b, const CollisionModel& model, const BeliefModel& belief_model,
                const StopParams& stop);

/// The per-step term g_b + g_stop_b used both in the planning constraint and
/// in the budget ledger.
struct StepRisk {
  double g = 0.0;
  double g_stop = 0.0;
  double total() const { return g + g_stop; }
};

StepRisk step_risk(const WorldBelief& b, const CollisionModel& model,
                   const BeliefModel& belief_model, const StopParams& stop, bool include_stop);

}  // namespace rbrhc
