#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbrhc/discrete_oracle.hpp"
#include "rbrhc/risk.hpp"

namespace rbrhc::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Golden values of the two-curve racetrack.
struct RacetrackReport {
  /// Risk the open-loop joint constraint believes it allots at step 0.
  double jcc_planned_bound = 0.0;
  /// Exact risk of replanning that constraint every step.
  double jcc_exact = 0.0;
  std::vector<int> jcc_controls;  ///< along the no-crash branch
  /// Budgeted controller with rho0 = 0.1, delta = 0.
  double rb_exact = 0.0;
  std::vector<int> rb_controls;
  std::vector<ActionKind> rb_actions;
  std::vector<double> rb_subtracted;
  /// Open-loop bound and exact risk of the fixed sequence (fast, 70).
  discrete::UmdpCheck ol_sequence;
  double seconds = 0.0;
};

RacetrackReport racetrack_report();
std::string racetrack_table(const RacetrackReport& report);

/// One model of the random discrete corpus and the risks of the policies
/// evaluated on it.
struct CorpusEntry {
  std::uint64_t seed = 0;
  int states = 0;
  int horizon = 0;
  IRB irb;
  discrete::PolicyRisk budget;
  /// Open-loop and PCL fixed-constraint policies and one random sequence.
  std::vector<discrete::PolicyRisk> others;
  discrete::UmdpCheck random_sequence;
};

struct CorpusReport {
  std::vector<CorpusEntry> entries;
  int guarantee_violations = 0;  ///< budget.exact > rho0 + delta * T
  int boole_violations = 0;      ///< per_step_sum < exact for some policy
  int umdp_violations = 0;       ///< open-loop bound < exact
  double seconds = 0.0;
};

CorpusReport discrete_corpus(int models, std::uint64_t base_seed = 1);

struct DiskInstance {
  Vec2 mu1;
  Mat2 sigma1;
  double r1 = 0.0;
  Vec2 mu2;
  Mat2 sigma2;
  double r2 = 0.0;
  double clearance = 0.0;  ///< |mu1 - mu2| - r1 - r2
  double bound = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
  bool sound = false;  ///< bound >= estimate - 3 standard errors
};

struct DiskReport {
  std::vector<DiskInstance> instances;
  int violations = 0;
  double seconds = 0.0;
};

/// Random disk pairs (including overlapping means) checked against a Monte
/// Carlo overlap estimate.
DiskReport disk_bound_report(int instances, long samples, std::uint64_t seed,
                             DiskBoundFn bound = &disk_collision_bound);

struct LatticeCase {
  std::uint64_t seed = 0;
  int horizon = 0;
  long sequences = 0;     ///< root-to-leaf paths enumerated
  double rho = 0.0;
  bool oracle_feasible = false;
  double oracle_cost = 0.0;
  bool solver_feasible = false;
  double solver_cost = 0.0;
  double solver_risk = 0.0;
  double duality_gap = 0.0;
  int monotonicity_violations = 0;
};

struct PlannerOracleReport {
  std::vector<LatticeCase> cases;
  int missed_feasible = 0;     ///< solver infeasible while enumeration is not
  int spurious_feasible = 0;   ///< solver feasible while enumeration is not
  int constraint_violations = 0;
  int recomputation_mismatches = 0;
  double seconds = 0.0;
};

/// Small lattices whose every control sequence is enumerated and compared
/// with the Lagrangian solver.
PlannerOracleReport planner_oracle_report(int lattices, std::uint64_t seed = 1);

struct VerifyOptions {
  DiskBoundFn disk_bound = &disk_collision_bound;
  int disk_instances = 20;
  long disk_samples = 1000000;
  int discrete_models = 60;
  int planner_lattices = 100;
  std::uint64_t seed = 20240611;
};

CheckResult check_racetrack();
CheckResult check_racetrack_budget();
CheckResult check_discrete_guarantee(const CorpusReport& corpus);
CheckResult check_boole(const CorpusReport& corpus);
CheckResult check_disk_bound(const VerifyOptions& options);
CheckResult check_planner_oracle(const VerifyOptions& options);
CheckResult check_ledger();

std::vector<CheckResult> run_all(const VerifyOptions& options = {});

}  // namespace rbrhc::verify
