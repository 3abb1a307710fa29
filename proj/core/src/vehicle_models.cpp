#include "rbrhc/vehicle_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rbrhc {

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (a <= 0.0) a += kTwoPi;
  return a - std::numbers::pi;
}

ReferencePath::ReferencePath(std::vector<Waypoint> waypoints) : waypoints_(std::move(waypoints)) {
  if (waypoints_.size() < 2) {
    throw std::invalid_argument("reference path needs at least two waypoints");
  }
  arclength_.reserve(waypoints_.size());
  arclength_.push_back(0.0);
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    const double ds = std::hypot(waypoints_[i].x - waypoints_[i - 1].x,
                                 waypoints_[i].y - waypoints_[i - 1].y);
    if (!(ds > 0.0)) {
      throw std::invalid_argument("reference path waypoints " + std::to_string(i - 1) + " and " +
                                  std::to_string(i) + " coincide");
    }
    arclength_.push_back(arclength_.back() + ds);
  }
}

ReferencePath ReferencePath::from_points(std::span<const Vec2> points) {
  std::vector<Vec2> unique;
  unique.reserve(points.size());
  for (const Vec2& p : points) {
    if (unique.empty() || (p - unique.back()).norm() > 1e-9) unique.push_back(p);
  }
  if (unique.size() < 2) {
    throw std::invalid_argument("reference path needs at least two distinct points");
  }
  std::vector<Waypoint> wps(unique.size());
  for (std::size_t i = 0; i < unique.size(); ++i) {
    const std::size_t a = i + 1 < unique.size() ? i : i - 1;
    const Vec2 d = unique[a + 1] - unique[a];
    wps[i] = {unique[i].x(), unique[i].y(), std::atan2(d.y(), d.x())};
  }
  return ReferencePath(std::move(wps));
}

ReferencePath ReferencePath::from_waypoints(std::vector<Waypoint> waypoints) {
  return ReferencePath(std::move(waypoints));
}

std::size_t ReferencePath::segment_index(double s) const {
  const auto it = std::upper_bound(arclength_.begin(), arclength_.end(), s);
  if (it == arclength_.begin()) return 0;
  const auto idx = static_cast<std::size_t>(it - arclength_.begin()) - 1;
  return std::min(idx, arclength_.size() - 2);
}

PathBuilder::PathBuilder(Vec2 start, double heading, double spacing)
    : points_{start}, cursor_(start), heading_(heading), spacing_(spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("path spacing must be positive");
}

PathBuilder& PathBuilder::straight(double distance) {
  const int n = std::max(1, static_cast<int>(std::ceil(distance / spacing_)));
  const Vec2 dir(std::cos(heading_), std::sin(heading_));
  const Vec2 start = cursor_;
  for (int i = 1; i <= n; ++i) {
    points_.push_back(start + dir * (distance * i / n));
  }
  cursor_ = points_.back();
  return *this;
}

PathBuilder& PathBuilder::arc(double radius, double sweep) {
  const double arc_len = std::abs(radius * sweep);
  const int n = std::max(2, static_cast<int>(std::ceil(arc_len / spacing_)));
  const double side = sweep >= 0.0 ? 1.0 : -1.0;
  // Center lies to the left for left turns.
  const Vec2 normal(-std::sin(heading_), std::cos(heading_));
  const Vec2 center = cursor_ + side * radius * normal;
  const double start_angle = std::atan2(cursor_.y() - center.y(), cursor_.x() - center.x());
  for (int i = 1; i <= n; ++i) {
    const double a = start_angle + sweep * i / n;
    points_.emplace_back(center.x() + radius * std::cos(a), center.y() + radius * std::sin(a));
  }
  cursor_ = points_.back();
  heading_ = wrap_angle(heading_ + sweep);
  return *this;
}

ReferencePath PathBuilder::build() const { return ReferencePath::from_points(points_); }

namespace {

Pose interpolate(const ReferencePath& path, double s) {
  const auto& wps = path.waypoints();
  const auto& arc = path.cumulative_arclength();
  const std::size_t i = path.segment_index(s);
  const double span = arc[i + 1] - arc[i];
  const double t = std::clamp((s - arc[i]) / span, 0.0, 1.0);
  Pose pose;
  pose.position = Vec2(wps[i].x + t * (wps[i + 1].x - wps[i].x),
                       wps[i].y + t * (wps[i + 1].y - wps[i].y));
  const double dh = wrap_angle(wps[i + 1].heading - wps[i].heading);
  pose.heading = wrap_angle(wps[i].heading + t * dh);
  return pose;
}

}  // namespace

Pose pose_at(const ReferencePath& path, double s) {
  if (!(s >= 0.0 && s <= path.length())) {
    throw std::out_of_range("arc length " + std::to_string(s) + " outside [0, " +
                            std::to_string(path.length()) + "]");
  }
  return interpolate(path, s);
}

Pose pose_at_extended(const ReferencePath& path, double s) {
  if (s < 0.0) {
    Pose p = interpolate(path, 0.0);
    p.position += s * Vec2(std::cos(p.heading), std::sin(p.heading));
    return p;
  }
  if (s > path.length()) {
    Pose p = interpolate(path, path.length());
    p.position += (s - path.length()) * Vec2(std::cos(p.heading), std::sin(p.heading));
    return p;
  }
  return interpolate(path, s);
}

VehicleBody VehicleBody::rectangle(double length, double width) {
  return VehicleBody{{FootprintSpec{length, width, 0.0}}};
}

VehicleBody VehicleBody::tractor_trailer(const FootprintSpec& tractor, const FootprintSpec& trailer,
                                         double hitch_offset) {
  FootprintSpec front = tractor;
  front.offset = 0.0;
  FootprintSpec back = trailer;
  back.offset = -hitch_offset;
  return VehicleBody{{front, back}};
}

double VehicleBody::bounding_radius() const {
  double r = 0.0;
  for (const auto& p : parts) {
    r = std::max(r, std::hypot(std::abs(p.offset) + 0.5 * p.length, 0.5 * p.width));
  }
  return r;
}

StopParams StopParams::make(double u_stop, double v_max, double dt) {
  if (!(u_stop > 0.0) || !(dt > 0.0) || v_max < 0.0) {
    throw std::invalid_argument("stop parameters need u_stop > 0, dt > 0, v_max >= 0");
  }
  return StopParams{u_stop, steps_to_stop(v_max, u_stop, dt), dt};
}

int steps_to_stop(double v, double u_stop, double dt) {
  if (v <= 0.0) return 0;
  // Relative slack absorbs representation error in ratios like 6 / 2.
  const double ratio = v / (u_stop * dt);
  return static_cast<int>(std::ceil(ratio * (1.0 - 1e-12)));
}

EgoKinematicState advance_on_path(const EgoKinematicState& state, double accel, double dt,
                                  double path_length) {
  EgoKinematicState next;
  const double v1 = state.v + accel * dt;
  double dist = 0.0;
  if (v1 >= 0.0) {
    dist = 0.5 * (state.v + v1) * dt;
    next.v = v1;
  } else {
    // Speed hits zero at t0 = v / |a| and stays there.
    const double t0 = state.v / -accel;
    dist = 0.5 * state.v * t0;
    next.v = 0.0;
  }
  next.s = std::min(state.s + dist, path_length);
  return next;
}

double time_to_reach(const EgoKinematicState& state, double accel, double dt, double target) {
  const double gap = target - state.s;
  if (gap <= 0.0) return 0.0;
  // Motion stops early when the speed would go negative.
  double horizon = dt;
  if (accel < 0.0 && state.v + accel * dt < 0.0) horizon = state.v / -accel;
  const double reach = state.v * horizon + 0.5 * accel * horizon * horizon;
  if (reach < gap) return -1.0;
  if (std::abs(accel) < 1e-12) return state.v > 0.0 ? gap / state.v : -1.0;
  // Smallest nonnegative root of 0.5 a t^2 + v t - gap = 0.
  const double disc = state.v * state.v + 2.0 * accel * gap;
  const double t = (-state.v + std::sqrt(std::max(0.0, disc))) / accel;
  return std::clamp(t, 0.0, horizon);
}

std::vector<double> emergency_stop_controls(double v0, const StopParams& params) {
  return std::vector<double>(static_cast<std::size_t>(steps_to_stop(v0, params.u_stop, params.dt)),
                             -params.u_stop);
}

namespace {

std::array<Vec2, 2> axes_of(const OrientedRect& r) {
  const double c = std::cos(r.heading);
  const double s = std::sin(r.heading);
  return {Vec2(c, s), Vec2(-s, c)};
}

double projected_radius(const OrientedRect& r, const Vec2& axis) {
  const auto ax = axes_of(r);
  return 0.5 * r.length * std::abs(ax[0].dot(axis)) + 0.5 * r.width * std::abs(ax[1].dot(axis));
}

}  // namespace

bool rectangles_overlap(const OrientedRect& a, const OrientedRect& b) {
  const Vec2 d = b.center - a.center;
  const auto aa = axes_of(a);
  const auto bb = axes_of(b);
  for (const Vec2* axis : {&aa[0], &aa[1], &bb[0], &bb[1]}) {
    const double sep = std::abs(d.dot(*axis));
    if (sep > projected_radius(a, *axis) + projected_radius(b, *axis)) return false;
  }
  return true;
}

std::vector<OrientedRect> body_on_path(const VehicleBody& body, const ReferencePath& path,
                                       double s) {
  std::vector<OrientedRect> out;
  out.reserve(body.parts.size());
  for (const auto& part : body.parts) {
    const Pose p = pose_at_extended(path, s + part.offset);
    out.push_back({p.position, p.heading, part.length, part.width});
  }
  return out;
}

std::vector<OrientedRect> body_at_pose(const VehicleBody& body, const Pose& pose) {
  std::vector<OrientedRect> out;
  out.reserve(body.parts.size());
  const Vec2 axis(std::cos(pose.heading), std::sin(pose.heading));
  for (const auto& part : body.parts) {
    out.push_back({pose.position + part.offset * axis, pose.heading, part.length, part.width});
  }
  return out;
}

}  // namespace rbrhc
