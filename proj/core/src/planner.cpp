#include "rbrhc/planner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

#include "rbrhc/errors.hpp"

namespace rbrhc {

void LatticeSpec::validate(double u_stop) const {
  if (!(s_res > 0.0) || !(v_res > 0.0)) {
    throw std::invalid_argument("lattice resolutions must be positive");
  }
  if (horizon < 1) throw std::invalid_argument("lattice horizon must be at least one step");
  if (!(dt > 0.0)) throw std::invalid_argument("lattice timestep must be positive");
  const auto has = [&](double a) {
    return std::any_of(accels.begin(), accels.end(),
                       [&](double x) { return std::abs(x - a) < 1e-12; });
  };
  if (!has(0.0)) throw std::invalid_argument("accel set must contain 0");
  if (!has(-u_stop)) throw std::invalid_argument("accel set must contain -u_stop");
}

namespace {

struct CacheKey {
  int offset;
  double s;
  bool operator==(const CacheKey& o) const { return offset == o.offset && s == o.s; }
};

struct CacheKeyHash {
  std::size_t operator()(const CacheKey& k) const {
    const auto bits = std::bit_cast<std::uint64_t>(k.s);
    return std::hash<std::uint64_t>{}(bits * 0x9E3779B97F4A7C15ULL ^
                                      static_cast<std::uint64_t>(k.offset));
  }
};

/// Node risks for snapped layers. Per-pattern disk sums depend only on the
/// ego arc length and the step offset, so they are shared between nodes and
/// weighted by the layer's pattern weights on demand.
class LayerRisk {
 public:
  LayerRisk(const WorldBelief& b, const PlanningEnv& env, const ProblemOptions& opts, int horizon)
      : env_(env), base_step_(b.step), base_var_(b.ego.cov(0, 0)) {
    for (std::size_t a = 0; a < b.agents.size(); ++a) {
      for (std::size_t p = 0; p < b.agents[a].patterns.size(); ++p) flat_.push_back({a, p});
    }
    agents_ = b.agents;
    std::vector<AgentMixture> cur = b.agents;
    weights_.push_back(flatten(cur));
    for (int i = 1; i <= horizon; ++i) {
      const UpdateRule rule = i == 1 ? opts.first_step : opts.later_steps;
      if (rule == UpdateRule::kPcl) {
        for (auto& m : cur) {
          if (m.patterns.size() < 2) continue;
          const Vec2 likely = m.patterns[m.dominant()].at(base_step_ + i).mean;
          m = reweight(m, base_step_ + i, likely, env.belief_model.agent_observation_noise);
        }
      }
      weights_.push_back(flatten(cur));
    }
  }

  StepRisk node_risk(int layer, const EgoKinematicState& st, bool include_stop) {
    StepRisk r;
    r.g = g(layer, layer, st);
    if (!include_stop) return r;
    double total = 0.0;
    EgoKinematicState cur = st;
    for (int tau = 1; tau <= env_.stop.t_stop; ++tau) {
      cur = advance_on_path(cur, -env_.stop.u_stop, env_.stop.dt, env_.collision.path());
      total += g(layer, layer + tau, cur);
    }
    r.g_stop = std::clamp(total, 0.0, 1.0);
    return r;
  }

 private:
  std::vector<double> flatten(const std::vector<AgentMixture>& mixtures) const {
    std::vector<double> w;
    w.reserve(flat_.size());
    for (const auto& [a, p] : flat_) w.push_back(mixtures[a].patterns[p].weight);
    return w;
  }

  double g(int weight_layer, int offset, const EgoKinematicState& st) {
    if (env_.collision.passive_safety() && st.v == 0.0) return 0.0;
    if (flat_.empty()) return 0.0;
    const std::vector<double>& raw = raw_sums(offset, st.s);
    const std::vector<double>& w = weights_[static_cast<std::size_t>(weight_layer)];
    double total = 0.0;
    for (std::size_t f = 0; f < flat_.size(); ++f) {
      if (!(w[f] > 0.0)) continue;
      total += w[f] * raw[f];
    }
    return std::clamp(total, 0.0, 1.0);
  }

  const std::vector<double>& raw_sums(int offset, double s) {
    const CacheKey key{offset, s};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double var = base_var_ + offset * env_.belief_model.process_noise(0, 0) *
                                       env_.belief_model.dt;
    std::vector<double> raw;
    raw.reserve(flat_.size());
    for (const auto& [a, p] : flat_) {
      const PredictedStep& pred = agents_[a].patterns[p].at(base_step_ + offset);
      raw.push_back(env_.collision.pattern_risk(s, var, a, pred));
    }
    return cache_.emplace(key, std::move(raw)).first->second;
  }

  const PlanningEnv& env_;
  int base_step_;
  double base_var_;
  std::vector<std::pair<std::size_t, std::size_t>> flat_;
  std::vector<AgentMixture> agents_;
  std::vector<std::vector<double>> weights_;
  std::unordered_map<CacheKey, std::vector<double>, CacheKeyHash> cache_;
};

struct SnapKey {
  int s;
  int v;
  bool goal;
  bool operator==(const SnapKey& o) const { return s == o.s && v == o.v && goal == o.goal; }
};

struct SnapKeyHash {
  std::size_t operator()(const SnapKey& k) const {
    return std::hash<std::int64_t>{}((static_cast<std::int64_t>(k.s) << 21) ^
                                     (static_cast<std::int64_t>(k.v) << 1) ^ (k.goal ? 1 : 0));
  }
};

double edge_cost(const EgoKinematicState& from, double accel, double dt, double goal_s,
                 bool reaches_goal) {
  if (!reaches_goal) return dt;
  const double t = time_to_reach(from, accel, dt, goal_s);
  return t >= 0.0 ? t : dt;
}

}  // namespace

PlanGraph expand_graph(const WorldBelief& b, const PlanningEnv& env, const ProblemOptions& opts) {
  const LatticeSpec& lat = env.lattice;
  const int horizon = opts.horizon > 0 ? opts.horizon : lat.horizon;
  const double dt = lat.dt;
  const auto snap_s = [&](double s) { return static_cast<int>(std::lround(s / lat.s_res)); };
  const auto snap_v = [&](double v) { return static_cast<int>(std::lround(v / lat.v_res)); };
  const auto allowed = [&](const EgoKinematicState& st, double a) {
    return st.v + a * dt <= lat.v_max + 1e-9;
  };

  PlanGraph graph;
  graph.goal_s = env.goal_s;
  graph.v_max = lat.v_max;
  graph.layers.resize(static_cast<std::size_t>(horizon) + 1);

  GraphNode root;
  root.key = {snap_s(b.ego.mean.s), snap_v(b.ego.mean.v), 0};
  root.state = b.ego.mean;
  root.goal = b.ego.mean.s >= env.goal_s;
  graph.layers[0].push_back(root);
  if (root.goal) return graph;

  LayerRisk layer_risk(b, env, opts, horizon);

  // Layer 1: exact successors of the current belief, one per control.
  for (double a : lat.accels) {
    if (!allowed(b.ego.mean, a)) continue;
    const WorldBelief next = opts.first_step == UpdateRule::kOpenLoop
                                 ? open_loop_update(b, a, env.belief_model)
                                 : pcl_update(b, a, env.belief_model);
    GraphNode node;
    node.state = next.ego.mean;
    node.key = {snap_s(node.state.s), snap_v(node.state.v), 1};
    node.goal = node.state.s >= env.goal_s;
    node.risk = step_risk(next, env.collision, env.belief_model, env.stop, opts.include_stop_risk);
    graph.layers[0][0].out.push_back(
        {static_cast<int>(graph.layers[1].size()), a,
         edge_cost(b.ego.mean, a, dt, env.goal_s, node.goal)});
    graph.layers[1].push_back(std::move(node));
  }

  for (int i = 1; i < horizon; ++i) {
    auto& cur = graph.layers[static_cast<std::size_t>(i)];
    auto& nxt = graph.layers[static_cast<std::size_t>(i) + 1];
    std::unordered_map<SnapKey, int, SnapKeyHash> index;
    for (auto& node : cur) {
      if (node.goal) continue;
      for (double a : lat.accels) {
        if (!allowed(node.state, a)) continue;
        const EgoKinematicState raw = advance_on_path(node.state, a, dt, env.collision.path());
        const bool goal = raw.s >= env.goal_s;
        const SnapKey key{snap_s(raw.s), snap_v(raw.v), goal};
        auto [it, inserted] = index.try_emplace(key, static_cast<int>(nxt.size()));
        if (inserted) {
          GraphNode succ;
          succ.key = {key.s, key.v, i + 1};
          succ.state = {key.s * lat.s_res, std::min(key.v * lat.v_res, lat.v_max)};
          succ.goal = goal;
          succ.risk = layer_risk.node_risk(i + 1, succ.state, opts.include_stop_risk);
          nxt.push_back(std::move(succ));
        }
        node.out.push_back({it->second, a, edge_cost(node.state, a, dt, env.goal_s, goal)});
      }
    }
  }
  return graph;
}

double fold_risk(const std::vector<StepRisk>& terms) {
  double r = 0.0;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) r = it->total() + r;
  return r;
}

namespace {

struct Value {
  double cost = std::numeric_limits<double>::infinity();
  double risk = std::numeric_limits<double>::infinity();
  int edge = -1;
  bool dead = true;
};

/// True when (cost_a, risk_a) is strictly preferred over (cost_b, risk_b).
int compare(double lambda, double cost_a, double risk_a, double cost_b, double risk_b) {
  if (lambda == kLexicographic) {
    if (risk_a != risk_b) return risk_a < risk_b ? -1 : 1;
    if (cost_a != cost_b) return cost_a < cost_b ? -1 : 1;
    return 0;
  }
  const double ka = cost_a + lambda * risk_a;
  const double kb = cost_b + lambda * risk_b;
  if (ka != kb) return ka < kb ? -1 : 1;
  return 0;
}

}  // namespace

SpeedPlan search_with_lambda(const PlanGraph& graph, double lambda) {
  if (graph.layers.empty() || graph.layers[0].empty()) {
    throw InfeasibleGraph("planning graph has no root node");
  }
  const std::size_t n_layers = graph.layers.size();
  std::vector<std::vector<Value>> values(n_layers);
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = graph.layers[l];
    auto& vals = values[l];
    vals.resize(layer.size());
    for (std::size_t n = 0; n < layer.size(); ++n) {
      const GraphNode& node = layer[n];
      Value& v = vals[n];
      if (node.goal || l + 1 == n_layers) {
        v.cost = node.goal ? 0.0 : std::max(0.0, graph.goal_s - node.state.s) / graph.v_max;
        v.risk = 0.0;
        v.dead = false;
        continue;
      }
      for (std::size_t e = 0; e < node.out.size(); ++e) {
        const EdgeAnnotation& edge = node.out[e];
        const Value& sv = values[l + 1][static_cast<std::size_t>(edge.to)];
        if (sv.dead) continue;
        const GraphNode& succ = graph.layers[l + 1][static_cast<std::size_t>(edge.to)];
        const double cost = edge.cost + sv.cost;
        const double risk = succ.risk.total() + sv.risk;
        bool take = v.dead;
        if (!take) {
          const int c = compare(lambda, cost, risk, v.cost, v.risk);
          if (c < 0) {
            take = true;
          } else if (c == 0) {
            const EdgeAnnotation& cur = node.out[static_cast<std::size_t>(v.edge)];
            const double mag = std::abs(edge.control);
            const double cur_mag = std::abs(cur.control);
            const int cur_v = graph.layers[l + 1][static_cast<std::size_t>(cur.to)].key.v_index;
            take = mag < cur_mag || (mag == cur_mag && succ.key.v_index < cur_v);
          }
        }
        if (take) {
          v.cost = cost;
          v.risk = risk;
          v.edge = static_cast<int>(e);
          v.dead = false;
        }
      }
    }
  }
  if (values[0][0].dead) {
    throw InfeasibleGraph("no control sequence spans the horizon or reaches the goal");
  }

  SpeedPlan plan;
  plan.total_cost = values[0][0].cost;
  plan.total_risk = values[0][0].risk;
  std::size_t l = 0;
  std::size_t n = 0;
  while (values[l][n].edge >= 0) {
    const EdgeAnnotation& edge = graph.layers[l][n].out[static_cast<std::size_t>(values[l][n].edge)];
    ++l;
    n = static_cast<std::size_t>(edge.to);
    const GraphNode& node = graph.layers[l][n];
    plan.controls.push_back(edge.control);
    plan.states.push_back(node.state);
    plan.step_risks.push_back(node.risk);
  }
  plan.reaches_goal = graph.layers[l][n].goal;
  return plan;
}

SolveResult solve_chance_constrained(const PlanGraph& graph, double rho, double tol) {
  SolveResult result;
  struct Sample {
    double lambda;
    double cost;
    double risk;
  };
  std::vector<Sample> trace;
  const auto run = [&](double lambda) {
    SpeedPlan p = search_with_lambda(graph, lambda);
    ++result.stats.searches;
    trace.push_back({lambda, p.total_cost, p.total_risk});
    return p;
  };

  SpeedPlan free_plan = run(0.0);
  if (free_plan.total_risk <= rho) {
    result.plan = std::move(free_plan);
    return result;
  }
  SpeedPlan safest = run(kLexicographic);
  if (safest.total_risk > rho) return result;

  std::optional<SpeedPlan> best;
  double best_lambda = kLexicographic;
  const auto consider = [&](SpeedPlan&& p, double lambda) {
    if (p.total_risk > rho) return;
    if (!best || p.total_cost < best->total_cost ||
        (p.total_cost == best->total_cost && p.total_risk < best->total_risk)) {
      best = std::move(p);
      best_lambda = lambda;
    }
  };
  consider(SpeedPlan(safest), kLexicographic);

  constexpr double kLambdaCap = 1152921504606846976.0;  // 2^60
  double lo = 0.0;
  double hi = 1.0;
  bool hi_feasible = false;
  while (true) {
    SpeedPlan p = run(hi);
    if (p.total_risk <= rho) {
      hi_feasible = true;
      consider(std::move(p), hi);
      break;
    }
    lo = hi;
    if (hi >= kLambdaCap) break;
    hi *= 2.0;
  }
  if (hi_feasible) {
    for (int it = 0; it < 100 && hi - lo > 1e-6 * hi; ++it) {
      if (best && rho - best->total_risk <= tol) break;
      const double mid = 0.5 * (lo + hi);
      SpeedPlan p = run(mid);
      ++result.stats.bisection_iterations;
      if (p.total_risk <= rho) {
        hi = mid;
        consider(std::move(p), mid);
      } else {
        lo = mid;
      }
    }
  }

  std::sort(trace.begin(), trace.end(),
            [](const Sample& a, const Sample& b) { return a.lambda < b.lambda; });
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const double risk_slack = 1e-12 * std::max(1.0, std::abs(trace[i - 1].risk));
    const double cost_slack = 1e-12 * std::max(1.0, std::abs(trace[i - 1].cost));
    if (trace[i].risk > trace[i - 1].risk + risk_slack ||
        trace[i].cost < trace[i - 1].cost - cost_slack) {
      ++result.stats.monotonicity_violations;
    }
  }

  result.stats.lambda = best_lambda;
  result.stats.duality_gap = best_lambda == kLexicographic
                                 ? std::numeric_limits<double>::infinity()
                                 : best_lambda * (rho - best->total_risk);
  result.plan = std::move(best);
  return result;
}

SolveResult solve_chance_constrained(const WorldBelief& b, double rho, const PlanningEnv& env,
                                     const ProblemOptions& opts, double tol) {
  return solve_chance_constrained(expand_graph(b, env, opts), rho, tol);
}

}  // namespace rbrhc
