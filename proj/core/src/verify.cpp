#include "rbrhc/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "rbrhc/errors.hpp"
#include "rbrhc/scenario.hpp"
#include "rbrhc/sim.hpp"

namespace rbrhc::verify {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

constexpr double kExactTol = 1e-12;

}  // namespace

RacetrackReport racetrack_report() {
  const auto start = Clock::now();
  const discrete::Model m = discrete::racetrack_model();
  RacetrackReport out;

  discrete::SearchOptions ol;
  ol.horizon = m.horizon;
  const auto plan0 = discrete::solve_sequences(m, m.initial, 0, 0.1, ol);
  out.jcc_planned_bound = plan0 ? plan0->total_risk : std::nan("");

  discrete::FixedConstraintPolicy jcc(m, m.horizon, 0.1, UpdateRule::kOpenLoop);
  out.jcc_exact = discrete::exact_policy_risk(m, jcc).exact;

  IRB irb;
  irb.rho0 = 0.1;
  irb.delta = 0.0;
  irb.T = m.horizon;
  discrete::BudgetPolicy rb(m, m.horizon, irb);
  out.rb_exact = discrete::exact_policy_risk(m, rb).exact;

  // Walk the no-crash branch with fresh policies to record the controls.
  constexpr int kSafe = 1;
  discrete::FixedConstraintPolicy jcc_walk(m, m.horizon, 0.1, UpdateRule::kOpenLoop);
  discrete::BudgetPolicy rb_walk(m, m.horizon, irb);
  discrete::Belief bj = m.initial;
  discrete::Belief br = m.initial;
  for (int k = 0; k < m.horizon; ++k) {
    const int uj = jcc_walk.act(k, bj);
    out.jcc_controls.push_back(uj);
    bj = discrete::bayes_update(m, bj, uj, kSafe);
    const int ur = rb_walk.act(k, br);
    out.rb_controls.push_back(ur);
    br = discrete::bayes_update(m, br, ur, kSafe);
  }
  out.rb_actions = rb_walk.actions();
  for (const auto& e : rb_walk.ledger().history()) out.rb_subtracted.push_back(e.subtracted);

  out.ol_sequence = discrete::umdp_transform_check(m, {discrete::kFast, discrete::kSlow});
  out.seconds = seconds_since(start);
  return out;
}

std::string racetrack_table(const RacetrackReport& r) {
  const discrete::Model m = discrete::racetrack_model();
  const auto names = [&](const std::vector<int>& us) {
    std::string s;
    for (std::size_t i = 0; i < us.size(); ++i) {
      if (i) s += ", ";
      s += m.controls[static_cast<std::size_t>(us[i])];
    }
    return s;
  };
  std::ostringstream os;
  os << "controller                  controls (no crash)   planned   exact\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-27s %-21s %-9.4g %.17g\n", "open-loop JCC, replanned",
                names(r.jcc_controls).c_str(), r.jcc_planned_bound, r.jcc_exact);
  os << line;
  std::snprintf(line, sizeof line, "%-27s %-21s %-9.4g %.17g\n", "risk budget (rho0 = 0.1)",
                names(r.rb_controls).c_str(), 0.1, r.rb_exact);
  os << line;
  std::snprintf(line, sizeof line, "%-27s %-21s %-9.4g %.17g\n", "fixed sequence",
                names({discrete::kFast, discrete::kSlow}).c_str(), r.ol_sequence.bound,
                r.ol_sequence.exact);
  os << line;
  return os.str();
}

CorpusReport discrete_corpus(int models, std::uint64_t base_seed) {
  const auto start = Clock::now();
  CorpusReport out;
  for (int i = 0; i < models; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    const discrete::RandomInstance inst = discrete::random_instance(seed);
    const discrete::Model& m = inst.model;
    CorpusEntry e;
    e.seed = seed;
    e.states = m.n_states();
    e.horizon = m.horizon;
    e.irb = inst.irb;

    discrete::BudgetPolicy budget(m, inst.planner_horizon, inst.irb);
    e.budget = discrete::exact_policy_risk(m, budget);
    if (e.budget.exact > inst.irb.total() + kExactTol) ++out.guarantee_violations;

    const double alpha = inst.irb.rho0;
    for (auto rule : {UpdateRule::kOpenLoop, UpdateRule::kPcl}) {
      discrete::FixedConstraintPolicy p(m, inst.planner_horizon, alpha, rule);
      e.others.push_back(discrete::exact_policy_risk(m, p));
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, m.n_controls() - 1);
    std::vector<int> seq(static_cast<std::size_t>(m.horizon));
    for (int& u : seq) u = pick(rng);
    discrete::SequencePolicy sp(seq);
    e.others.push_back(discrete::exact_policy_risk(m, sp));
    e.random_sequence = discrete::umdp_transform_check(m, seq);
    if (e.random_sequence.bound < e.random_sequence.exact - kExactTol) ++out.umdp_violations;

    bool boole_ok = e.budget.per_step_sum >= e.budget.exact - kExactTol;
    for (const auto& r : e.others) boole_ok = boole_ok && r.per_step_sum >= r.exact - kExactTol;
    if (!boole_ok) ++out.boole_violations;
    out.entries.push_back(std::move(e));
  }
  out.seconds = seconds_since(start);
  return out;
}

namespace {

Mat2 random_cov(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  const double a = ang(rng);
  Mat2 rot;
  rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  const double l1 = scale * u(rng);
  const double l2 = scale * u(rng);
  Mat2 d = Mat2::Zero();
  d(0, 0) = l1 * l1;
  d(1, 1) = l2 * l2;
  return rot * d * rot.transpose();
}

}  // namespace

DiskReport disk_bound_report(int instances, long samples, std::uint64_t seed, DiskBoundFn bound) {
  const auto start = Clock::now();
  DiskReport out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < instances; ++i) {
    DiskInstance inst;
    inst.r1 = 0.3 + 1.2 * unif(rng);
    inst.r2 = 0.3 + 1.2 * unif(rng);
    const double scale = 0.2 + 1.3 * unif(rng);
    inst.sigma1 = random_cov(rng, scale);
    inst.sigma2 = random_cov(rng, scale);
    const double dir = 2.0 * std::numbers::pi * unif(rng);
    const Vec2 e(std::cos(dir), std::sin(dir));
    const double sigma_line = std::sqrt(e.dot((inst.sigma1 + inst.sigma2) * e));
    // Every fourth pair overlaps at the means, by at most 2.5 sigma so the
    // overlap probability stays resolvable by the sample size.
    double clearance = i % 4 == 0 ? -sigma_line * (0.5 + 2.0 * unif(rng))
                                  : 2.5 * sigma_line * unif(rng);
    clearance = std::max(clearance, 0.05 - inst.r1 - inst.r2);
    const double dist = inst.r1 + inst.r2 + clearance;
    inst.mu1 = Vec2(4.0 * unif(rng) - 2.0, 4.0 * unif(rng) - 2.0);
    inst.mu2 = inst.mu1 - dist * e;
    inst.clearance = (inst.mu1 - inst.mu2).norm() - inst.r1 - inst.r2;
    inst.bound = bound(inst.mu1, inst.sigma1, inst.r1, inst.mu2, inst.sigma2, inst.r2);

    const Eigen::LLT<Mat2> c1(inst.sigma1);
    const Eigen::LLT<Mat2> c2(inst.sigma2);
    const Mat2 l1 = c1.matrixL();
    const Mat2 l2 = c2.matrixL();
    const double reach = inst.r1 + inst.r2;
    long hits = 0;
    for (long n = 0; n < samples; ++n) {
      const Vec2 z1(normal(rng), normal(rng));
      const Vec2 z2(normal(rng), normal(rng));
      const Vec2 d = (inst.mu1 + l1 * z1) - (inst.mu2 + l2 * z2);
      if (d.squaredNorm() <= reach * reach) ++hits;
    }
    const double ns = static_cast<double>(samples);
    inst.estimate = static_cast<double>(hits) / ns;
    inst.standard_error = std::sqrt(inst.estimate * (1.0 - inst.estimate) / ns);
    inst.sound = inst.bound >= inst.estimate - 3.0 * inst.standard_error;
    if (!inst.sound) ++out.violations;
    out.instances.push_back(inst);
  }
  out.seconds = seconds_since(start);
  return out;
}

namespace {

/// Small crossing scenario whose lattice has at most 4^6 control sequences.
Scenario toy_scenario(std::mt19937_64& rng, int horizon) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Scenario sc;
  sc.name = "toy";
  sc.ego.path = {Vec2(0, 0), Vec2(80, 0)};
  sc.ego.body = VehicleBody::rectangle(4.0, 2.0);
  sc.ego.v_max = 4.0;
  sc.ego.u_stop = 2.0;
  sc.ego.init = {0.0, std::floor(3.0 * unif(rng))};
  sc.ego.init_s_sd = 0.5 * unif(rng);
  sc.ego.goal_s = 6.0 + 20.0 * unif(rng);
  const int accel_set = static_cast<int>(3.0 * unif(rng));
  if (accel_set == 0) {
    sc.ego.accels = {-2.0, -1.0, 0.0, 1.0};
  } else if (accel_set == 1) {
    sc.ego.accels = {-2.0, 0.0, 2.0};
  } else {
    sc.ego.accels = {-2.0, 0.0, 1.0, 2.0};
  }
  sc.T = horizon;
  sc.N = horizon;
  sc.s_res = unif(rng) < 0.5 ? 0.5 : 1.0;
  sc.v_res = unif(rng) < 0.5 ? 0.5 : 1.0;
  sc.disks_per_part = 1 + static_cast<int>(2.0 * unif(rng));
  sc.process_noise_s = 0.3 * unif(rng);

  AgentSpec car;
  car.name = "crossing";
  car.body = VehicleBody::rectangle(4.0, 2.0);
  const double x = 5.0 + 15.0 * unif(rng);
  const double speed = 1.0 + 4.0 * unif(rng);
  PatternSpec cross;
  cross.waypoints = {Vec2(x, -12.0 - 8.0 * unif(rng)), Vec2(x, 60.0)};
  cross.speed = speed;
  cross.sigma0 = 0.2 + 0.6 * unif(rng);
  cross.sigma_rate = 0.3 * unif(rng);
  if (unif(rng) < 0.5) {
    PatternSpec wait = cross;
    wait.speed = 0.0;
    cross.weight = 0.3 + 0.4 * unif(rng);
    wait.weight = 1.0 - cross.weight;
    car.patterns = {cross, wait};
  } else {
    car.patterns = {cross};
  }
  sc.agents.push_back(car);
  return sc;
}

struct Enumerated {
  double risk;
  double cost;
};

/// Every root-to-leaf path; risk and cost are accumulated from the leaf
/// backwards, matching the solver's summation order.
void enumerate_paths(const PlanGraph& g, std::size_t layer, std::size_t node,
                     std::vector<Enumerated>& out) {
  const GraphNode& n = g.layers[layer][node];
  if (n.goal || layer + 1 == g.layers.size()) {
    out.push_back({0.0, n.goal ? 0.0 : std::max(0.0, g.goal_s - n.state.s) / g.v_max});
    return;
  }
  for (const EdgeAnnotation& e : n.out) {
    std::vector<Enumerated> tails;
    enumerate_paths(g, layer + 1, static_cast<std::size_t>(e.to), tails);
    const GraphNode& succ = g.layers[layer + 1][static_cast<std::size_t>(e.to)];
    for (const Enumerated& t : tails) {
      out.push_back({succ.risk.total() + t.risk, e.cost + t.cost});
    }
  }
}

}  // namespace

PlannerOracleReport planner_oracle_report(int lattices, std::uint64_t seed) {
  const auto start = Clock::now();
  PlannerOracleReport out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < lattices; ++i) {
    LatticeCase c;
    c.seed = seed + static_cast<std::uint64_t>(i);
    c.horizon = 2 + i % 5;
    const PreparedScenario prepared(toy_scenario(rng, c.horizon));
    ProblemOptions opts;
    opts.first_step = UpdateRule::kOpenLoop;
    opts.later_steps = unif(rng) < 0.5 ? UpdateRule::kPcl : UpdateRule::kOpenLoop;
    opts.include_stop_risk = unif(rng) < 0.5;
    opts.horizon = c.horizon;
    const WorldBelief b0 = prepared.initial_belief(prepared.spec().ego.init);
    const PlanGraph graph = expand_graph(b0, prepared.env(), opts);

    std::vector<Enumerated> paths;
    enumerate_paths(graph, 0, 0, paths);
    c.sequences = static_cast<long>(paths.size());
    if (paths.empty()) continue;
    double lo = paths.front().risk;
    double hi = lo;
    for (const auto& p : paths) {
      lo = std::min(lo, p.risk);
      hi = std::max(hi, p.risk);
    }
    // Alternate between budgets that sit exactly on a path's risk and
    // budgets drawn across (and slightly below) the achievable range.
    if (i % 2 == 0) {
      c.rho = paths[static_cast<std::size_t>(unif(rng) * static_cast<double>(paths.size())) %
                   paths.size()].risk;
    } else {
      c.rho = lo * 0.9 + (hi - lo * 0.9) * unif(rng);
    }

    for (const auto& p : paths) {
      if (p.risk <= c.rho && (!c.oracle_feasible || p.cost < c.oracle_cost)) {
        c.oracle_feasible = true;
        c.oracle_cost = p.cost;
      }
    }
    const SolveResult r = solve_chance_constrained(graph, c.rho);
    c.solver_feasible = r.plan.has_value();
    c.duality_gap = r.stats.duality_gap;
    c.monotonicity_violations = r.stats.monotonicity_violations;
    if (r.plan) {
      c.solver_cost = r.plan->total_cost;
      c.solver_risk = r.plan->total_risk;
      double refold = 0.0;
      for (std::size_t k = r.plan->step_risks.size(); k-- > 0;) {
        refold = r.plan->step_risks[k].total() + refold;
      }
      if (c.solver_risk > c.rho) ++out.constraint_violations;
      if (refold != c.solver_risk) ++out.recomputation_mismatches;
      if (c.oracle_feasible && c.solver_cost < c.oracle_cost - 1e-9) ++out.recomputation_mismatches;
    }
    if (c.oracle_feasible && !c.solver_feasible) ++out.missed_feasible;
    if (!c.oracle_feasible && c.solver_feasible) ++out.spurious_feasible;
    out.cases.push_back(c);
  }
  out.seconds = seconds_since(start);
  return out;
}

CheckResult check_racetrack() {
  const RacetrackReport r = racetrack_report();
  CheckResult c;
  c.name = "racetrack: replanned open-loop JCC";
  c.passed = std::abs(r.jcc_exact - 0.19) <= kExactTol &&
             std::abs(r.jcc_planned_bound - 0.1) <= kExactTol;
  c.detail = "planned bound " + fmt("%.17g", r.jcc_planned_bound) + ", exact risk " +
             fmt("%.17g", r.jcc_exact) + " (expected 0.1 and 0.19)\n" + racetrack_table(r);
  return c;
}

CheckResult check_racetrack_budget() {
  const RacetrackReport r = racetrack_report();
  CheckResult c;
  c.name = "racetrack: risk budget";
  const bool controls = r.rb_controls == std::vector<int>{discrete::kFast, discrete::kSlow};
  const bool spent = !r.rb_subtracted.empty() && std::abs(r.rb_subtracted[0] - 0.1) <= kExactTol;
  c.passed = r.rb_exact <= 0.1 + kExactTol && controls && spent &&
             r.ol_sequence.bound >= r.ol_sequence.exact - kExactTol;
  c.detail = "exact risk " + fmt("%.17g", r.rb_exact) + " (budget 0.1); first step spends " +
             (r.rb_subtracted.empty() ? std::string("nothing") : fmt("%.17g", r.rb_subtracted[0])) +
             (controls ? "; second curve at 70mph" : "; unexpected controls");
  return c;
}

CheckResult check_discrete_guarantee(const CorpusReport& corpus) {
  CheckResult c;
  c.name = "discrete corpus: budget guarantee";
  c.passed = corpus.guarantee_violations == 0 && corpus.umdp_violations == 0 &&
             !corpus.entries.empty();
  double worst = -1.0;
  for (const auto& e : corpus.entries) worst = std::max(worst, e.budget.exact - e.irb.total());
  c.detail = std::to_string(corpus.entries.size()) + " models, " +
             std::to_string(corpus.guarantee_violations) + " violations of rho0 + delta*T, " +
             std::to_string(corpus.umdp_violations) + " open-loop bound violations; max(exact - bound) " +
             fmt("%.3g", worst);
  return c;
}

CheckResult check_boole(const CorpusReport& corpus) {
  CheckResult c;
  c.name = "discrete corpus: Boole dominance";
  c.passed = corpus.boole_violations == 0 && !corpus.entries.empty();
  std::size_t policies = 0;
  for (const auto& e : corpus.entries) policies += 1 + e.others.size();
  c.detail = std::to_string(policies) + " policies, " + std::to_string(corpus.boole_violations) +
             " models with per-step sum below the exact risk";
  return c;
}

CheckResult check_disk_bound(const VerifyOptions& options) {
  const DiskReport r =
      disk_bound_report(options.disk_instances, options.disk_samples, options.seed, options.disk_bound);
  CheckResult c;
  c.name = "disk bound vs Monte Carlo";
  c.passed = r.violations == 0 && !r.instances.empty();
  c.detail = std::to_string(r.instances.size()) + " pairs, " + std::to_string(r.violations) +
             " below estimate - 3 se";
  for (const auto& inst : r.instances) {
    if (inst.sound) continue;
    c.detail += "\n  clearance " + fmt("%.4g", inst.clearance) + ": bound " + fmt("%.17g", inst.bound) +
                " < estimate " + fmt("%.17g", inst.estimate);
  }
  return c;
}

CheckResult check_planner_oracle(const VerifyOptions& options) {
  const PlannerOracleReport r = planner_oracle_report(options.planner_lattices, options.seed);
  CheckResult c;
  c.name = "planner vs exhaustive enumeration";
  c.passed = r.missed_feasible == 0 && r.spurious_feasible == 0 && r.constraint_violations == 0 &&
             r.recomputation_mismatches == 0 &&
             static_cast<int>(r.cases.size()) == options.planner_lattices;
  double max_gap = 0.0;
  long max_seq = 0;
  for (const auto& lc : r.cases) {
    if (std::isfinite(lc.duality_gap)) max_gap = std::max(max_gap, lc.duality_gap);
    max_seq = std::max(max_seq, lc.sequences);
  }
  c.detail = std::to_string(r.cases.size()) + " lattices (up to " + std::to_string(max_seq) +
             " sequences), missed " + std::to_string(r.missed_feasible) + ", spurious " +
             std::to_string(r.spurious_feasible) + ", constraint violations " +
             std::to_string(r.constraint_violations) + ", mismatches " +
             std::to_string(r.recomputation_mismatches) + ", max finite duality gap " +
             fmt("%.3g", max_gap);
  return c;
}

CheckResult check_ledger() {
  CheckResult c;
  c.name = "budget ledger identity";
  const PreparedScenario prepared(builtin_scenario("adversarial_crossing"));
  IRB irb;
  irb.rho0 = 0.01;
  irb.delta = 0.001;
  irb.T = prepared.spec().T;
  double residual = 0.0;
  int excursions = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const EpisodeTrace t = run_episode(Algorithm::kRbRhc, prepared, irb, seed);
    residual = std::max(residual, t.max_ledger_residual);
    excursions += t.budget_excursions;
  }
  c.passed = residual <= kExactTol && excursions == 0;
  c.detail = "max residual " + fmt("%.3g", residual) + ", cumulative-risk excursions " +
             std::to_string(excursions);
  return c;
}

std::vector<CheckResult> run_all(const VerifyOptions& options) {
  std::vector<CheckResult> out;
  const auto guarded = [&](auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({"check raised", false, e.what()});
    }
  };
  guarded([] { return check_racetrack(); });
  guarded([] { return check_racetrack_budget(); });
  CorpusReport corpus;
  try {
    corpus = discrete_corpus(options.discrete_models, options.seed);
  } catch (const std::exception& e) {
    out.push_back({"discrete corpus raised", false, e.what()});
  }
  guarded([&] { return check_discrete_guarantee(corpus); });
  guarded([&] { return check_boole(corpus); });
  guarded([&] { return check_disk_bound(options); });
  guarded([&] { return check_planner_oracle(options); });
  guarded([] { return check_ledger(); });
  return out;
}

}  // namespace rbrhc::verify
