#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "rbrhc/belief.hpp"
#include "rbrhc/risk.hpp"
#include "rbrhc/vehicle_models.hpp"

namespace rbrhc {

/// Discretization of the (s, v, step) planning lattice.
struct LatticeSpec {
  double s_res = 0.5;
  double v_res = 0.5;
  int horizon = 25;
  double dt = 1.0;
  double v_max = 5.0;
  std::vector<double> accels{-2.0, -1.0, 0.0, 1.0};

  /// Throws std::invalid_argument unless resolutions and the horizon are
  /// positive and the accel set contains both 0 and -u_stop.
  void validate(double u_stop) const;
};

/// Everything a planning query needs besides the belief.
struct PlanningEnv {
  LatticeSpec lattice;
  BeliefModel belief_model;
  CollisionModel collision;
  StopParams stop;
  double goal_s = 0.0;
};

enum class UpdateRule { kOpenLoop, kPcl };

/// Which belief update predicts each layer and whether g_stop_b is charged.
struct ProblemOptions {
  UpdateRule first_step = UpdateRule::kOpenLoop;
  UpdateRule later_steps = UpdateRule::kPcl;
  bool include_stop_risk = true;
  /// Overrides lattice.horizon when positive.
  int horizon = 0;
};

struct LatticeNode {
  int s_index = 0;
  int v_index = 0;
  int step = 0;
};

/// Outgoing edge; the successor's risk lives on the successor node.
struct EdgeAnnotation {
  int to = -1;
  double control = 0.0;
  double cost = 0.0;
};

struct GraphNode {
  LatticeNode key;
  EgoKinematicState state;
  bool goal = false;
  StepRisk risk;
  std::vector<EdgeAnnotation> out;
};

/// Layered DAG: layer 0 holds the current belief's node, layer 1 the exact
/// open-loop (or PCL) successors, later layers lattice-snapped states.
struct PlanGraph {
  std::vector<std::vector<GraphNode>> layers;
  double goal_s = 0.0;
  double v_max = 1.0;
};

PlanGraph expand_graph(const WorldBelief& b, const PlanningEnv& env, const ProblemOptions& opts);

struct SpeedPlan {
  std::vector<double> controls;
  std::vector<EgoKinematicState> states;  ///< predicted ego means after each control
  std::vector<StepRisk> step_risks;
  double total_cost = 0.0;
  /// Right fold r1 + (r2 + (... + rn)) of the per-step totals.
  double total_risk = 0.0;
  bool reaches_goal = false;
};

/// Sums per-step terms in the canonical order used by the search.
double fold_risk(const std::vector<StepRisk>& terms);

inline constexpr double kLexicographic = std::numeric_limits<double>::infinity();

/// Backward DP minimizing cost + lambda * risk. lambda = kLexicographic
/// minimizes risk first and cost second. Ties go to the lowest control
/// magnitude, then the lowest successor v index. Throws InfeasibleGraph when
/// no path spans the horizon or reaches the goal.
SpeedPlan search_with_lambda(const PlanGraph& graph, double lambda);

struct SolveStats {
  int searches = 0;
  int bisection_iterations = 0;
  double lambda = 0.0;
  /// lambda * (rho - plan risk) for the returned plan.
  double duality_gap = 0.0;
  int monotonicity_violations = 0;
};

struct SolveResult {
  std::optional<SpeedPlan> plan;  ///< nullopt means infeasible
  SolveStats stats;
};

/// Lagrangian relaxation with bisection on lambda. Returns the lowest-cost
/// plan found with total risk <= rho, or nullopt when even the minimum-risk
/// plan exceeds rho. Bisection stops at a relative lambda bracket of 1e-6,
/// after 100 iterations, or once a feasible plan is within `tol` of rho.
SolveResult solve_chance_constrained(const PlanGraph& graph, double rho, double tol = 1e-9);

SolveResult solve_chance_constrained(const WorldBelief& b, double rho, const PlanningEnv& env,
                                     const ProblemOptions& opts, double tol = 1e-9);

}  // namespace rbrhc
