#include "rbrhc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rbrhc/errors.hpp"

namespace rbrhc {

PredictedTrajectory build_pattern_trajectory(const PatternSpec& spec, double dt, int steps) {
  const ReferencePath path = ReferencePath::from_points(spec.waypoints);
  PredictedTrajectory traj;
  traj.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    const double moving = std::max(0, t - spec.start_delay) * dt;
    const Pose pose = pose_at_extended(path, spec.start_s + spec.speed * moving);
    const double sigma = spec.sigma0 + spec.sigma_rate * t * dt;
    PredictedStep st;
    st.mean = pose.position;
    st.heading = pose.heading;
    st.cov = Mat2::Identity() * (sigma * sigma);
    traj.push_back(st);
  }
  return traj;
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  throw ConfigError(ConfigError::Kind::kValidation, field, 0, field + ": " + message);
}

void check_body(const VehicleBody& body, const std::string& field) {
  if (body.parts.empty()) invalid(field, "vehicle body needs at least one rectangle");
  for (const auto& p : body.parts) {
    if (!(p.length > 0.0) || !(p.width > 0.0)) invalid(field, "footprint length and width must be positive");
  }
}

}  // namespace

void Scenario::validate() const {
  if (!(dt > 0.0)) invalid("dt", "must be positive");
  if (T < 1) invalid("T", "must be at least 1");
  if (N < 1 || N > T) invalid("N", "must satisfy 1 <= N <= T");
  if (!(s_res > 0.0)) invalid("s_res", "must be positive");
  if (!(v_res > 0.0)) invalid("v_res", "must be positive");
  if (disks_per_part < 1) invalid("disks", "must be at least 1");
  if (!(process_noise_s >= 0.0)) invalid("process_noise_s", "must be nonnegative");
  if (!(process_noise_v >= 0.0)) invalid("process_noise_v", "must be nonnegative");
  if (!(observation_noise >= 0.0)) invalid("observation_noise", "must be nonnegative");
  if (!(rho0 >= 0.0 && rho0 <= 1.0)) invalid("rho0", "must lie in [0, 1]");
  if (!(delta >= 0.0 && delta <= 1.0)) invalid("delta", "must lie in [0, 1]");
  if (ego.path.size() < 2) invalid("ego.path", "needs at least two waypoints");
  check_body(ego.body, "ego");
  if (!(ego.v_max > 0.0)) invalid("ego.v_max", "must be positive");
  if (!(ego.u_stop > 0.0)) invalid("ego.u_stop", "must be positive");
  if (!(ego.init.v >= 0.0 && ego.init.v <= ego.v_max)) invalid("ego.init_v", "must lie in [0, v_max]");
  if (!(ego.init.s >= 0.0)) invalid("ego.init_s", "must be nonnegative");
  if (!(ego.init_s_sd >= 0.0) || !(ego.init_v_sd >= 0.0)) invalid("ego.init_sd", "must be nonnegative");
  if (!(ego.goal_s > ego.init.s)) invalid("ego.goal_s", "must lie beyond the initial arc length");
  for (double a : ego.accels) {
    if (a < -ego.u_stop - 1e-12) invalid("ego.accels", "no control may brake harder than u_stop");
  }
  const auto has = [&](double a) {
    return std::any_of(ego.accels.begin(), ego.accels.end(),
                       [&](double x) { return std::abs(x - a) < 1e-12; });
  };
  if (!has(0.0)) invalid("ego.accels", "must contain 0");
  if (!has(-ego.u_stop)) invalid("ego.accels", "must contain -u_stop");
  for (std::size_t a = 0; a < agents.size(); ++a) {
    const std::string field = "agents[" + std::to_string(a) + "]";
    check_body(agents[a].body, field);
    if (agents[a].patterns.empty()) invalid(field + ".patterns", "needs at least one pattern");
    double sum = 0.0;
    for (const auto& p : agents[a].patterns) {
      if (!(p.weight >= 0.0 && p.weight <= 1.0)) invalid(field + ".weight", "must lie in [0, 1]");
      if (p.waypoints.size() < 2) invalid(field + ".path", "needs at least two waypoints");
      if (!(p.speed >= 0.0)) invalid(field + ".speed", "must be nonnegative");
      if (!(p.sigma0 >= 0.0) || !(p.sigma_rate >= 0.0)) invalid(field + ".sigma", "must be nonnegative");
      if (p.start_delay < 0) invalid(field + ".start_delay", "must be nonnegative");
      sum += p.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) invalid(field + ".patterns", "weights must sum to 1");
  }
}

PreparedScenario::PreparedScenario(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  const Scenario& sc = scenario_;
  try {
    path_ = std::make_shared<const ReferencePath>(ReferencePath::from_points(sc.ego.path));
  } catch (const std::invalid_argument& e) {
    invalid("ego.path", e.what());
  }
  if (sc.ego.goal_s > path_->length()) invalid("ego.goal_s", "lies beyond the end of the path");

  env_.stop = StopParams::make(sc.ego.u_stop, sc.ego.v_max, sc.dt);
  env_.lattice.s_res = sc.s_res;
  env_.lattice.v_res = sc.v_res;
  env_.lattice.horizon = sc.N;
  env_.lattice.dt = sc.dt;
  env_.lattice.v_max = sc.ego.v_max;
  env_.lattice.accels = sc.ego.accels;
  env_.lattice.validate(sc.ego.u_stop);
  env_.goal_s = sc.ego.goal_s;

  env_.belief_model.path = path_;
  env_.belief_model.dt = sc.dt;
  env_.belief_model.process_noise = Mat2::Zero();
  env_.belief_model.process_noise(0, 0) = sc.process_noise_s * sc.process_noise_s;
  env_.belief_model.process_noise(1, 1) = sc.process_noise_v * sc.process_noise_v;
  env_.belief_model.ego_measurement_cov = Mat2::Zero();
  env_.belief_model.agent_observation_noise =
      Mat2::Identity() * (sc.observation_noise * sc.observation_noise);

  std::vector<VehicleBody> bodies;
  for (const auto& a : sc.agents) bodies.push_back(a.body);
  env_.collision = CollisionModel(path_, sc.ego.body, bodies, sc.disks_per_part, sc.passive_safety);

  prediction_steps_ = sc.T + sc.N + env_.stop.t_stop + 1;
  for (const auto& a : sc.agents) {
    AgentMixture m;
    for (const auto& p : a.patterns) {
      AgentPattern ap;
      ap.weight = p.weight;
      ap.trajectory = std::make_shared<const PredictedTrajectory>(
          build_pattern_trajectory(p, sc.dt, prediction_steps_));
      m.patterns.push_back(std::move(ap));
    }
    priors_.push_back(std::move(m));
  }
}

WorldBelief PreparedScenario::initial_belief(const EgoKinematicState& ego) const {
  WorldBelief b;
  b.ego.mean = ego;
  b.ego.cov = env_.belief_model.ego_measurement_cov;
  b.agents = priors_;
  b.step = 0;
  return b;
}

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vec2> straight_path(Vec2 start, double heading, double length) {
  return {start, start + length * Vec2(std::cos(heading), std::sin(heading))};
}

std::vector<Vec2> points_of(const PathBuilder& pb) {
  const ReferencePath path = pb.build();
  std::vector<Vec2> pts;
  for (const auto& w : path.waypoints()) pts.emplace_back(w.x, w.y);
  return pts;
}

Scenario clear_road() {
  Scenario sc;
  sc.name = "clear_road";
  sc.description = "Straight road without other traffic";
  sc.ego.path = straight_path(Vec2(0, 0), 0.0, 150.0);
  sc.ego.body = VehicleBody::rectangle(12.6, 2.4);
  sc.ego.goal_s = 100.0;
  sc.ego.v_max = 6.0;
  sc.ego.u_stop = 2.0;
  sc.s_res = 1.0;
  sc.v_res = 1.0;
  return sc;
}

Scenario exp1_tjunction() {
  Scenario sc;
  sc.name = "exp1_tjunction";
  sc.description =
      "Bus-sized ego drives through a T-junction while a bus from the side road turns left "
      "across its lane";
  sc.ego.path = straight_path(Vec2(0, 0), 0.0, 150.0);
  sc.ego.body = VehicleBody::rectangle(12.6, 2.4);
  sc.ego.init = {0.0, 0.0};
  sc.ego.init_s_sd = 0.5;
  sc.ego.goal_s = 100.0;
  sc.ego.v_max = 6.0;
  sc.ego.u_stop = 2.0;
  sc.T = 25;
  sc.N = 25;
  sc.s_res = 1.0;
  sc.v_res = 1.0;

  AgentSpec bus;
  bus.name = "turning_bus";
  bus.body = VehicleBody::rectangle(12.6, 2.4);
  PathBuilder pb(Vec2(52.0, -45.0), kPi / 2);
  pb.straight(38.0).arc(10.5, kPi / 2).straight(120.0);
  PatternSpec turn;
  turn.weight = 1.0;
  turn.waypoints = points_of(pb);
  turn.speed = 4.0;
  turn.sigma0 = 0.3;
  turn.sigma_rate = 0.15;
  bus.patterns = {turn};
  sc.agents = {bus};
  return sc;
}

Scenario exp2_three_vehicle() {
  Scenario sc;
  sc.name = "exp2_three_vehicle";
  sc.description =
      "Tractor-trailer turns left behind a leading truck while an oncoming truck either turns "
      "right onto a side road (70%) or drives straight across the turn (30%)";
  const VehicleBody truck = VehicleBody::tractor_trailer({5.0, 2.5, 0.0}, {12.5, 2.4, 0.0}, 8.0);
  PathBuilder ego_path(Vec2(3.0, -60.0), kPi / 2);
  ego_path.straight(55.0).arc(13.0, kPi / 2).straight(120.0);
  sc.ego.path = points_of(ego_path);
  sc.ego.body = truck;
  sc.ego.init = {0.0, 0.0};
  sc.ego.init_s_sd = 0.5;
  sc.ego.goal_s = 100.0;
  sc.ego.v_max = 6.0;
  sc.ego.u_stop = 2.0;
  sc.T = 30;
  sc.N = 25;
  sc.s_res = 1.0;
  sc.v_res = 1.0;

  AgentSpec leader;
  leader.name = "vehicle1";
  leader.body = truck;
  PatternSpec ahead;
  ahead.weight = 1.0;
  ahead.waypoints = sc.ego.path;
  ahead.start_s = 40.0;
  ahead.speed = 6.0;
  ahead.sigma0 = 0.3;
  ahead.sigma_rate = 0.1;
  leader.patterns = {ahead};

  AgentSpec oncoming;
  oncoming.name = "vehicle2";
  oncoming.body = truck;
  PatternSpec right;
  right.weight = 0.7;
  PathBuilder right_path(Vec2(-3.0, 55.0), -kPi / 2);
  right_path.straight(27.0).arc(8.0, -kPi / 2).straight(150.0);
  right.waypoints = points_of(right_path);
  right.speed = 3.0;
  right.sigma0 = 0.3;
  right.sigma_rate = 0.05;
  PatternSpec across = right;
  across.weight = 0.3;
  across.waypoints = straight_path(Vec2(-3.0, 55.0), -kPi / 2, 250.0);
  oncoming.patterns = {right, across};

  sc.agents = {leader, oncoming};
  return sc;
}

Scenario adversarial_crossing() {
  Scenario sc;
  sc.name = "adversarial_crossing";
  sc.description =
      "A small vehicle usually turns away (70%) but sometimes crosses the ego lane (30%); "
      "optimistic prediction discounts the crossing";
  sc.ego.path = straight_path(Vec2(0, 0), 0.0, 150.0);
  sc.ego.body = VehicleBody::rectangle(4.0, 2.0);
  sc.ego.init = {0.0, 0.0};
  sc.ego.goal_s = 80.0;
  sc.ego.v_max = 6.0;
  sc.ego.u_stop = 2.0;
  sc.T = 20;
  sc.N = 20;
  sc.s_res = 1.0;
  sc.v_res = 1.0;
  sc.disks_per_part = 1;

  AgentSpec car;
  car.name = "crossing_car";
  car.body = VehicleBody::rectangle(2.0, 2.0);
  PatternSpec away;
  away.weight = 0.7;
  PathBuilder away_path(Vec2(40.0, -30.0), kPi / 2);
  away_path.straight(18.0).arc(4.0, -kPi / 2).straight(150.0);
  away.waypoints = points_of(away_path);
  away.speed = 3.0;
  away.sigma0 = 0.2;
  away.sigma_rate = 0.05;
  PatternSpec cross = away;
  cross.weight = 0.3;
  cross.waypoints = straight_path(Vec2(40.0, -30.0), kPi / 2, 200.0);
  car.patterns = {away, cross};
  sc.agents = {car};
  return sc;
}

}  // namespace

std::vector<ScenarioInfo> builtin_scenarios() {
  std::vector<ScenarioInfo> out;
  for (const Scenario& sc : {exp1_tjunction(), exp2_three_vehicle(), clear_road(),
                             adversarial_crossing()}) {
    out.push_back({sc.name, sc.description});
  }
  return out;
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "exp1" || name == "exp1_tjunction") return exp1_tjunction();
  if (name == "exp2" || name == "exp2_three_vehicle") return exp2_three_vehicle();
  if (name == "clear_road") return clear_road();
  if (name == "adversarial_crossing") return adversarial_crossing();
  throw ConfigError(ConfigError::Kind::kValidation, "scenario", 0,
                    "unknown builtin scenario '" + name + "'");
}

}  // namespace rbrhc
