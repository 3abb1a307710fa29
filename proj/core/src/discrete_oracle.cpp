#include "rbrhc/discrete_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "rbrhc/errors.hpp"

namespace rbrhc::discrete {

namespace {

void check_row(const std::vector<double>& row, std::size_t n, const std::string& what) {
  if (row.size() != n) throw std::invalid_argument(what + " has the wrong size");
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0)) throw std::invalid_argument(what + " has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(what + " does not sum to 1");
}

}  // namespace

void Model::validate() const {
  const std::size_t n = states.size();
  const std::size_t nu = controls.size();
  const std::size_t ny = observations.size();
  if (n == 0 || nu == 0 || ny == 0) throw std::invalid_argument("model needs states, controls, observations");
  if (collision.size() != n || stopped.size() != n) {
    throw std::invalid_argument("collision/stopped flags need one entry per state");
  }
  if (transition.size() != nu) throw std::invalid_argument("transition needs one matrix per control");
  for (std::size_t u = 0; u < nu; ++u) {
    if (transition[u].size() != n) throw std::invalid_argument("transition matrix has wrong rows");
    for (std::size_t x = 0; x < n; ++x) {
      check_row(transition[u][x], n, "transition row " + states[x] + "/" + controls[u]);
    }
  }
  if (observation.size() != n) throw std::invalid_argument("observation kernel has wrong rows");
  for (std::size_t x = 0; x < n; ++x) check_row(observation[x], ny, "observation row " + states[x]);
  if (stage_cost.size() != n) throw std::invalid_argument("stage cost has wrong rows");
  for (const auto& row : stage_cost) {
    if (row.size() != nu) throw std::invalid_argument("stage cost row has wrong size");
  }
  check_row(initial, n, "initial belief");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (stop_control < 0 || static_cast<std::size_t>(stop_control) >= nu) {
    throw std::invalid_argument("stop control out of range");
  }
  if (t_stop < 1) throw std::invalid_argument("t_stop must be at least 1");
}

Belief open_loop_update(const Model& m, const Belief& b, int u) {
  const auto& T = m.transition[static_cast<std::size_t>(u)];
  Belief next(b.size(), 0.0);
  for (std::size_t x = 0; x < b.size(); ++x) {
    if (b[x] == 0.0) continue;
    for (std::size_t y = 0; y < b.size(); ++y) next[y] += b[x] * T[x][y];
  }
  return next;
}

double observation_probability(const Model& m, const Belief& b, int u, int y) {
  const Belief next = open_loop_update(m, b, u);
  double p = 0.0;
  for (std::size_t x = 0; x < next.size(); ++x) p += next[x] * m.observation[x][static_cast<std::size_t>(y)];
  return p;
}

namespace {

Belief condition(const Model& m, const Belief& predicted, int y) {
  Belief post(predicted.size(), 0.0);
  double total = 0.0;
  for (std::size_t x = 0; x < predicted.size(); ++x) {
    post[x] = predicted[x] * m.observation[x][static_cast<std::size_t>(y)];
    total += post[x];
  }
  if (!(total > 0.0)) {
    throw DegenerateObservation("observation " + m.observations[static_cast<std::size_t>(y)] +
                                " has probability zero");
  }
  for (double& p : post) p /= total;
  return post;
}

}  // namespace

Belief bayes_update(const Model& m, const Belief& b, int u, int y) {
  return condition(m, open_loop_update(m, b, u), y);
}

Belief pcl_update(const Model& m, const Belief& b, int u) {
  const Belief next = open_loop_update(m, b, u);
  int best = 0;
  double best_p = -1.0;
  for (int y = 0; y < m.n_observations(); ++y) {
    double p = 0.0;
    for (std::size_t x = 0; x < next.size(); ++x) p += next[x] * m.observation[x][static_cast<std::size_t>(y)];
    if (p > best_p) {
      best_p = p;
      best = y;
    }
  }
  return condition(m, next, best);
}

double g_b(const Model& m, const Belief& b) {
  double p = 0.0;
  for (std::size_t x = 0; x < b.size(); ++x) {
    if (m.collision[x]) p += b[x];
  }
  return std::clamp(p, 0.0, 1.0);
}

double g_stop_b(const Model& m, const Belief& b) {
  double total = 0.0;
  Belief cur = b;
  for (int tau = 1; tau <= m.t_stop; ++tau) {
    cur = open_loop_update(m, cur, m.stop_control);
    total += g_b(m, cur);
  }
  return std::clamp(total, 0.0, 1.0);
}

bool is_stopped(const Model& m, const Belief& b) {
  for (std::size_t x = 0; x < b.size(); ++x) {
    if (b[x] > 0.0 && !m.stopped[x]) return false;
  }
  return true;
}

double expected_cost(const Model& m, const Belief& b, int u) {
  double c = 0.0;
  for (std::size_t x = 0; x < b.size(); ++x) c += b[x] * m.stage_cost[x][static_cast<std::size_t>(u)];
  return c;
}

namespace {

struct Enumerator {
  const Model& m;
  std::int64_t cap;
  PolicyRisk result;

  // joint[2 * x + c]: mass of state x with collided flag c.
  void recurse(int step, const std::vector<double>& joint, const Belief& posterior,
               Policy& policy) {
    if (++result.nodes > cap) {
      throw InstanceTooLarge("history tree exceeds " + std::to_string(cap) + " nodes");
    }
    const std::size_t n = static_cast<std::size_t>(m.n_states());
    if (step == m.horizon) {
      for (std::size_t x = 0; x < n; ++x) result.exact += joint[2 * x + 1];
      return;
    }
    const int u = policy.act(step, posterior);
    const auto& T = m.transition[static_cast<std::size_t>(u)];
    std::vector<double> next(2 * n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t c = 0; c < 2; ++c) {
        const double mass = joint[2 * x + c];
        if (mass == 0.0) continue;
        for (std::size_t x2 = 0; x2 < n; ++x2) {
          if (T[x][x2] == 0.0) continue;
          const std::size_t c2 = (c == 1 || m.collision[x2]) ? 1 : 0;
          next[2 * x2 + c2] += mass * T[x][x2];
        }
      }
    }
    for (std::size_t x = 0; x < n; ++x) {
      if (m.collision[x]) result.per_step_sum += next[2 * x] + next[2 * x + 1];
    }
    for (int y = 0; y < m.n_observations(); ++y) {
      std::vector<double> branch(2 * n, 0.0);
      Belief marginal(n, 0.0);
      double total = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        const double py = m.observation[x][static_cast<std::size_t>(y)];
        for (std::size_t c = 0; c < 2; ++c) {
          branch[2 * x + c] = next[2 * x + c] * py;
          marginal[x] += branch[2 * x + c];
        }
        total += marginal[x];
      }
      if (!(total > 0.0)) continue;
      for (double& p : marginal) p /= total;
      auto child = policy.clone();
      recurse(step + 1, branch, marginal, *child);
    }
  }
};

}  // namespace

PolicyRisk exact_policy_risk(const Model& m, Policy& policy, std::int64_t node_cap) {
  m.validate();
  Enumerator e{m, node_cap, {}};
  const std::size_t n = static_cast<std::size_t>(m.n_states());
  std::vector<double> joint(2 * n, 0.0);
  for (std::size_t x = 0; x < n; ++x) joint[2 * x + (m.collision[x] ? 1 : 0)] = m.initial[x];
  e.result.per_step_sum = g_b(m, m.initial);
  auto root = policy.clone();
  e.recurse(0, joint, m.initial, *root);
  e.result.exact = std::clamp(e.result.exact, 0.0, 1.0);
  return e.result;
}

UmdpCheck umdp_transform_check(const Model& m, const std::vector<int>& controls) {
  if (static_cast<int>(controls.size()) != m.horizon) {
    throw std::invalid_argument("control sequence length must equal the model horizon");
  }
  UmdpCheck out;
  Belief b = m.initial;
  out.bound = g_b(m, b);
  for (int u : controls) {
    b = open_loop_update(m, b, u);
    out.bound += g_b(m, b);
  }
  SequencePolicy policy(controls);
  out.exact = exact_policy_risk(m, policy).exact;
  return out;
}

std::optional<SequencePlan> solve_sequences(const Model& m, const Belief& b, int step, double rho,
                                            const SearchOptions& opts) {
  const int h = std::min(opts.horizon, m.horizon - step);
  if (h < 1) return std::nullopt;
  const int nu = m.n_controls();
  std::vector<int> seq(static_cast<std::size_t>(h), 0);
  std::optional<SequencePlan> best;
  std::vector<StepRisk> risks(static_cast<std::size_t>(h));
  while (true) {
    Belief cur = b;
    double cost = 0.0;
    for (int i = 0; i < h; ++i) {
      const int u = seq[static_cast<std::size_t>(i)];
      cost += expected_cost(m, cur, u);
      const UpdateRule rule = i == 0 ? opts.first_step : opts.later_steps;
      cur = rule == UpdateRule::kOpenLoop ? open_loop_update(m, cur, u) : pcl_update(m, cur, u);
      StepRisk r;
      r.g = g_b(m, cur);
      if (opts.include_stop_risk) r.g_stop = g_stop_b(m, cur);
      risks[static_cast<std::size_t>(i)] = r;
    }
    const double risk = fold_risk(risks);
    if (risk <= rho && (!best || cost < best->cost)) {
      best = SequencePlan{seq, risks, risk, cost};
    }
    int d = h - 1;
    while (d >= 0 && seq[static_cast<std::size_t>(d)] == nu - 1) {
      seq[static_cast<std::size_t>(d)] = 0;
      --d;
    }
    if (d < 0) break;
    ++seq[static_cast<std::size_t>(d)];
  }
  return best;
}

SequencePlanner::SequencePlanner(const Model& m, int horizon) : model_(m) {
  opts_.horizon = horizon;
  opts_.first_step = UpdateRule::kOpenLoop;
  opts_.later_steps = UpdateRule::kPcl;
  opts_.include_stop_risk = true;
}

std::optional<PlannedAction<int>> SequencePlanner::solve(const State& b, double rho) const {
  const auto plan = solve_sequences(model_, b.belief, b.step, rho, opts_);
  if (!plan) return std::nullopt;
  return PlannedAction<int>{plan->controls.front(), plan->step_risks.front().total(),
                            plan->total_risk};
}

double SequencePlanner::first_step_risk(const State& b, int u) const {
  const std::vector<double> next = open_loop_update(model_, b.belief, u);
  return g_b(model_, next) + g_stop_b(model_, next);
}

BudgetPolicy::BudgetPolicy(const Model& m, int horizon, const IRB& irb)
    : planner_(m, horizon), ledger_(irb) {}

int BudgetPolicy::act(int step, const rbrhc::discrete::Belief& b) {
  const auto decision = rbrhc_step(SequencePlanner::State{b, step}, ledger_, planner_);
  if (ledger_.identity_residual() > 1e-12) throw std::logic_error("risk ledger identity violated");
  actions_.push_back(decision.kind);
  return decision.control;
}

FixedConstraintPolicy::FixedConstraintPolicy(const Model& m, int horizon, double alpha,
                                             UpdateRule rule)
    : model_(&m), alpha_(alpha) {
  opts_.horizon = horizon;
  opts_.first_step = rule;
  opts_.later_steps = rule;
  opts_.include_stop_risk = false;
}

int FixedConstraintPolicy::act(int step, const rbrhc::discrete::Belief& b) {
  const auto plan = solve_sequences(*model_, b, step, alpha_, opts_);
  if (plan) return plan->controls.front();
  return model_->stop_control;
}

Model racetrack_model() {
  Model m;
  m.states = {"curve1", "curve2", "done", "crash", "wreck"};
  m.controls = {"70mph", "fast"};
  m.observations = {"crash", "safe"};
  m.collision = {false, false, false, true, false};
  m.stopped = {false, false, true, false, true};
  const std::vector<double> to_curve2{0, 1, 0, 0, 0};
  const std::vector<double> to_done{0, 0, 1, 0, 0};
  const std::vector<double> to_wreck{0, 0, 0, 0, 1};
  const std::vector<double> risky_curve2{0, 0.9, 0, 0.1, 0};
  const std::vector<double> risky_done{0, 0, 0.9, 0.1, 0};
  m.transition = {
      {to_curve2, to_done, to_done, to_wreck, to_wreck},
      {risky_curve2, risky_done, to_done, to_wreck, to_wreck},
  };
  m.observation = {{0, 1}, {0, 1}, {0, 1}, {1, 0}, {1, 0}};
  m.stage_cost = {
      {1.0 / 70.0, 1.0 / 100.0},
      {1.0 / 70.0, 1.0 / 90.0},
      {0, 0},
      {0, 0},
      {0, 0},
  };
  m.initial = {1, 0, 0, 0, 0};
  m.horizon = 2;
  m.stop_control = kSlow;
  m.t_stop = 2;
  m.validate();
  return m;
}

namespace {

constexpr std::size_t kStopped = 0;
constexpr std::size_t kBraking = 1;
constexpr std::size_t kCrash = 2;
constexpr std::size_t kWreck = 3;
constexpr std::size_t kFirstMoving = 4;

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> w(n);
  double sum = 0.0;
  for (auto& x : w) {
    x = gamma(rng);
    sum += x;
  }
  for (auto& x : w) x /= sum;
  return w;
}

/// Makes a probability row sum to 1 exactly by assigning the remainder to
/// the largest entry.
void close_row(std::vector<double>& row) {
  double sum = 0.0;
  std::size_t big = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] > row[big]) big = i;
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i != big) sum += row[i];
  }
  row[big] = 1.0 - sum;
}

Model sample_model(std::mt19937_64& rng, const RandomModelSpec& spec) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int max_states = std::clamp(spec.max_states, 5, 8);
  const std::size_t n =
      static_cast<std::size_t>(std::uniform_int_distribution<int>(5, max_states)(rng));
  const std::size_t nu = static_cast<std::size_t>(std::uniform_int_distribution<int>(2, 3)(rng));
  const std::size_t ny = static_cast<std::size_t>(std::uniform_int_distribution<int>(2, 3)(rng));
  const std::size_t n_moving = n - kFirstMoving;

  Model m;
  m.states = {"stopped", "braking", "crash", "wreck"};
  for (std::size_t i = 0; i < n_moving; ++i) m.states.push_back("moving" + std::to_string(i));
  m.controls = {"brake"};
  for (std::size_t u = 1; u < nu; ++u) m.controls.push_back("go" + std::to_string(u));
  for (std::size_t y = 0; y < ny; ++y) m.observations.push_back("y" + std::to_string(y));
  m.collision.assign(n, false);
  m.collision[kCrash] = true;
  m.stopped.assign(n, false);
  m.stopped[kStopped] = true;
  m.stopped[kWreck] = true;

  const auto moving_row = [&](double crash) {
    std::vector<double> row(n, 0.0);
    const auto w = random_simplex(rng, n_moving);
    for (std::size_t i = 0; i < n_moving; ++i) row[kFirstMoving + i] = (1.0 - crash) * w[i];
    row[kCrash] = crash;
    close_row(row);
    return row;
  };
  const auto two_way = [&](std::size_t safe, double crash) {
    std::vector<double> row(n, 0.0);
    row[safe] = 1.0 - crash;
    row[kCrash] = crash;
    return row;
  };
  std::vector<double> to_wreck(n, 0.0);
  to_wreck[kWreck] = 1.0;

  // Some models keep crashed mass in the collision state, so per-step
  // collision events overlap.
  const bool absorbing_crash = unif(rng) < 0.3;
  std::vector<double> crash_row = to_wreck;
  if (absorbing_crash) {
    crash_row.assign(n, 0.0);
    crash_row[kCrash] = 1.0;
  }
  const double brake_risk = 0.05 * unif(rng);
  m.transition.assign(nu, std::vector<std::vector<double>>(n));
  for (std::size_t u = 0; u < nu; ++u) {
    auto& T = m.transition[u];
    T[kBraking] = two_way(kStopped, brake_risk);
    T[kCrash] = crash_row;
    T[kWreck] = to_wreck;
    if (u == 0) {
      T[kStopped] = two_way(kStopped, 0.0);
    } else {
      T[kStopped] = moving_row(0.05 * unif(rng));
    }
    for (std::size_t x = kFirstMoving; x < n; ++x) {
      if (u == 0) {
        T[x] = two_way(kBraking, 0.05 * unif(rng));
      } else {
        const double crash = unif(rng) < 0.3 ? 0.0 : 0.3 * unif(rng);
        T[x] = moving_row(crash);
      }
    }
  }

  const bool crisp = unif(rng) < 0.3;
  m.observation.assign(n, std::vector<double>(ny, 0.0));
  for (std::size_t x = 0; x < n; ++x) {
    if (crisp) {
      m.observation[x][static_cast<std::size_t>(rng() % ny)] = 1.0;
    } else {
      m.observation[x] = random_simplex(rng, ny);
      close_row(m.observation[x]);
    }
  }

  m.stage_cost.assign(n, std::vector<double>(nu, 0.0));
  for (std::size_t u = 0; u < nu; ++u) {
    m.stage_cost[kStopped][u] = u == 0 ? 1.5 : 0.5 + 0.7 * unif(rng);
    m.stage_cost[kBraking][u] = 1.0;
    for (std::size_t x = kFirstMoving; x < n; ++x) {
      m.stage_cost[x][u] = u == 0 ? 1.0 + unif(rng) : 0.2 + 0.8 * unif(rng);
    }
  }

  m.initial.assign(n, 0.0);
  const auto w = random_simplex(rng, n_moving);
  for (std::size_t i = 0; i < n_moving; ++i) m.initial[kFirstMoving + i] = w[i];
  close_row(m.initial);

  const int max_steps = std::max(2, spec.max_steps);
  m.horizon = std::uniform_int_distribution<int>(2, max_steps)(rng);
  m.stop_control = 0;
  m.t_stop = 2;
  m.validate();
  return m;
}

}  // namespace

RandomInstance random_instance(std::uint64_t seed, const RandomModelSpec& spec) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    RandomInstance inst;
    inst.model = sample_model(rng, spec);
    inst.planner_horizon = std::uniform_int_distribution<int>(1, inst.model.horizon)(rng);
    inst.irb.rho0 = 0.2 * unif(rng);
    inst.irb.delta = unif(rng) < 0.5 ? 0.0 : 0.03 * unif(rng);
    inst.irb.T = inst.model.horizon;
    SearchOptions opts;
    opts.horizon = inst.planner_horizon;
    opts.first_step = UpdateRule::kOpenLoop;
    opts.later_steps = UpdateRule::kPcl;
    opts.include_stop_risk = true;
    if (solve_sequences(inst.model, inst.model.initial, 0, inst.irb.rho0, opts)) return inst;
  }
  throw std::runtime_error("could not sample a feasible random instance");
}

}  // namespace rbrhc::discrete
