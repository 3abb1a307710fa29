#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace rbrhc {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct Pose {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Polyline reference path parameterized by arc length.
///
/// Headings are stored per waypoint; when derived from points, waypoint i
/// takes the direction of segment (i, i+1) and the last waypoint repeats the
/// final segment direction.
class ReferencePath {
 public:
  struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
  };

  /// Builds a path from positions only. Consecutive duplicates are dropped.
  /// Throws std::invalid_argument with fewer than two distinct points.
  static ReferencePath from_points(std::span<const Vec2> points);

  /// Builds a path from explicit waypoints; headings are taken as given.
  static ReferencePath from_waypoints(std::vector<Waypoint> waypoints);

  double length() const { return arclength_.back(); }
  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  const std::vector<double>& cumulative_arclength() const { return arclength_; }

  /// Index i of the segment [i, i+1] containing s (s clamped to the path).
  std::size_t segment_index(double s) const;

 private:
  explicit ReferencePath(std::vector<Waypoint> waypoints);

  std::vector<Waypoint> waypoints_;
  std::vector<double> arclength_;
};

/// Incremental builder for line/arc paths sampled at a fixed spacing.
class PathBuilder {
 public:
  PathBuilder(Vec2 start, double heading, double spacing = 0.5);

  PathBuilder& straight(double distance);
  /// Circular arc; positive sweep turns left (counter-clockwise).
  PathBuilder& arc(double radius, double sweep);

  ReferencePath build() const;

 private:
  std::vector<Vec2> points_;
  Vec2 cursor_;
  double heading_;
  double spacing_;
};

/// Pose at arc length s: linear position interpolation and shortest-arc
/// heading interpolation. Throws std::out_of_range unless 0 <= s <= length.
Pose pose_at(const ReferencePath& path, double s);

/// Same as pose_at inside the path; beyond either end the pose is
/// extrapolated along the end heading.
Pose pose_at_extended(const ReferencePath& path, double s);

/// Longitudinal state along a reference path.
struct EgoKinematicState {
  double s = 0.0;  ///< arc length [m]
  double v = 0.0;  ///< speed [m/s], never negative

  friend bool operator==(const EgoKinematicState&, const EgoKinematicState&) = default;
};

/// Rectangular footprint. `offset` is the signed distance from the vehicle
/// pose origin to the rectangle center along the body axis.
struct FootprintSpec {
  double length = 0.0;
  double width = 0.0;
  double offset = 0.0;
};

/// A vehicle is one or more rigid rectangles (tractor + trailer for
/// articulated vehicles).
struct VehicleBody {
  std::vector<FootprintSpec> parts;

  static VehicleBody rectangle(double length, double width);
  /// Tractor centered on the pose origin, trailer centered `hitch_offset`
  /// meters behind it.
  static VehicleBody tractor_trailer(const FootprintSpec& tractor, const FootprintSpec& trailer,
                                     double hitch_offset);

  /// Radius of the smallest origin-centered circle containing every part.
  double bounding_radius() const;
};

struct StopParams {
  double u_stop = 2.0;  ///< deceleration magnitude [m/s^2]
  int t_stop = 1;       ///< steps needed to stop from v_max
  double dt = 1.0;

  /// t_stop = ceil(v_max / (u_stop * dt)).
  static StopParams make(double u_stop, double v_max, double dt);
};

/// Number of u_stop steps needed to bring speed v to zero.
int steps_to_stop(double v, double u_stop, double dt);

/// One timestep of the longitudinal double integrator. Speed saturates at
/// zero inside the step and s saturates at `path_length`.
EgoKinematicState advance_on_path(const EgoKinematicState& state, double accel, double dt,
                                  double path_length);

inline EgoKinematicState advance_on_path(const EgoKinematicState& state, double accel, double dt,
                                         const ReferencePath& path) {
  return advance_on_path(state, accel, dt, path.length());
}

/// Time within the next step at which the vehicle first reaches arc length
/// `target`, or a negative value if it does not get there during the step.
double time_to_reach(const EgoKinematicState& state, double accel, double dt, double target);

/// ceil(v0 / (u_stop * dt)) copies of -u_stop.
std::vector<double> emergency_stop_controls(double v0, const StopParams& params);

/// Oriented rectangle in the world frame.
struct OrientedRect {
  Vec2 center = Vec2::Zero();
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;
};

/// Separating-axis overlap test; touching edges count as overlap.
bool rectangles_overlap(const OrientedRect& a, const OrientedRect& b);

/// World-frame rectangles of a body whose parts follow the path: each part
/// center sits at arc length s + offset with the path heading there.
std::vector<OrientedRect> body_on_path(const VehicleBody& body, const ReferencePath& path,
                                       double s);

/// World-frame rectangles of a rigid body at a pose.
std::vector<OrientedRect> body_at_pose(const VehicleBody& body, const Pose& pose);

}  // namespace rbrhc
