#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rbrhc/errors.hpp"
#include "rbrhc/risk.hpp"
#include "rbrhc/verify.hpp"

namespace rbrhc {
namespace {

TEST(DiskBound, TouchingAtMeanIsHalf) {
  const Mat2 s = 0.3 * Mat2::Identity();
  EXPECT_DOUBLE_EQ(disk_collision_bound(Vec2(0, 0), s, 1.0, Vec2(2.5, 0), s, 1.5), 0.5);
}

TEST(DiskBound, FarTailBelow1e100) {
  const Mat2 s = 0.5 * Mat2::Identity();
  const double sigma_line = 1.0;  // 0.5 + 0.5 along the center line
  const double p = disk_collision_bound(Vec2(0, 0), s, 1.0, Vec2(2.0 + 100.0 * sigma_line, 0), s, 1.0);
  EXPECT_LT(p, 1e-100);
}

TEST(DiskBound, CoincidentMeansAreCertain) {
  const Mat2 s = Mat2::Identity();
  EXPECT_EQ(disk_collision_bound(Vec2(1, 1), s, 0.1, Vec2(1, 1), s, 0.1), 1.0);
}

TEST(DiskBound, AnalyticValueOfReferenceInstance) {
  // d = 3, sigma_line^2 = 0.5: 0.5 erfc(3 / sqrt(2 * 0.5)).
  const Mat2 s = 0.25 * Mat2::Identity();
  const double p = disk_collision_bound(Vec2(0, 0), s, 1.0, Vec2(5, 0), s, 1.0);
  EXPECT_NEAR(p, 0.5 * std::erfc(3.0), 1e-18);
}

TEST(DiskBound, DominatesMonteCarloOnReferenceInstance) {
  const Mat2 s = 0.25 * Mat2::Identity();
  const double bound = disk_collision_bound(Vec2(0, 0), s, 1.0, Vec2(5, 0), s, 1.0);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 0.5);
  const long samples = 1000000;
  long hits = 0;
  for (long i = 0; i < samples; ++i) {
    const Vec2 c1(n(rng), n(rng));
    const Vec2 c2(5.0 + n(rng), n(rng));
    if ((c1 - c2).norm() <= 2.0) ++hits;
  }
  const double est = static_cast<double>(hits) / samples;
  const double se = std::sqrt(est * (1.0 - est) / samples);
  EXPECT_GE(bound, est - 3.0 * se);
}

TEST(DiskBound, MonotoneInClearance) {
  const Mat2 s = 0.4 * Mat2::Identity();
  double prev = 1.0;
  for (double x = 0.5; x < 12.0; x += 0.25) {
    const double p = disk_collision_bound(Vec2(0, 0), s, 1.0, Vec2(x, 0), s, 1.0);
    EXPECT_LE(p, prev);
    EXPECT_GE(p, 0.0);
    prev = p;
  }
}

double sign_flipped_bound(const Vec2& mu1, const Mat2& s1, double r1, const Vec2& mu2,
                          const Mat2& s2, double r2) {
  const Vec2 diff = mu1 - mu2;
  const double dist = diff.norm();
  if (dist < 1e-9) return 1.0;
  const Vec2 e = diff / dist;
  const double var = e.dot((s1 + s2) * e);
  const double d = dist - r1 - r2;
  return 0.5 * std::erfc(-d / std::sqrt(2.0 * var));
}

TEST(DiskBound, RandomizedInstancesAreSound) {
  const auto report = verify::disk_bound_report(20, 200000, 5);
  EXPECT_EQ(report.violations, 0);
}

TEST(DiskBound, SignFlipMutantIsCaught) {
  verify::VerifyOptions opts;
  opts.disk_bound = &sign_flipped_bound;
  const auto mutant = verify::check_disk_bound(opts);
  EXPECT_FALSE(mutant.passed) << mutant.detail;
  opts.disk_bound = &disk_collision_bound;
  const auto real = verify::check_disk_bound(opts);
  EXPECT_TRUE(real.passed) << real.detail;
}

TEST(Cover, SquareSingleDiskIsHalfDiagonal) {
  const DiskCover c = cover_footprint({3.0, 3.0, 0.0}, 1);
  ASSERT_EQ(c.disks.size(), 1u);
  EXPECT_DOUBLE_EQ(c.disks[0].radius, 3.0 / std::sqrt(2.0));
  EXPECT_EQ(c.disks[0].offset, Vec2(0, 0));
}

TEST(Cover, BusFootprintThreeDisks) {
  const DiskCover c = cover_footprint({12.6, 2.4, 0.0}, 3);
  ASSERT_EQ(c.disks.size(), 3u);
  for (const auto& d : c.disks) EXPECT_NEAR(d.radius, 2.419, 5e-4);
  EXPECT_DOUBLE_EQ(c.disks[0].radius, std::sqrt(2.1 * 2.1 + 1.2 * 1.2));
}

void expect_grid_covered(const FootprintSpec& fp, int n) {
  const DiskCover c = cover_footprint(fp, n);
  const double step = 0.05;
  for (double x = -0.5 * fp.length; x <= 0.5 * fp.length + 1e-12; x += step) {
    for (double y = -0.5 * fp.width; y <= 0.5 * fp.width + 1e-12; y += step) {
      bool inside = false;
      for (const auto& d : c.disks) {
        if ((Vec2(x, y) - d.offset).norm() <= d.radius + 1e-12) inside = true;
      }
      ASSERT_TRUE(inside) << "point (" << x << ", " << y << ") uncovered, n=" << n;
    }
  }
}

TEST(Cover, GridPointsInsideSomeDisk) {
  expect_grid_covered({12.6, 2.4, 0.0}, 3);
  expect_grid_covered({5.0, 2.5, 0.0}, 2);
  expect_grid_covered({12.5, 2.4, 0.0}, 4);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dim(0.5, 15.0);
  for (int i = 0; i < 10; ++i) expect_grid_covered({dim(rng), dim(rng), 0.0}, 1 + i % 5);
}

TEST(Cover, RejectsBadInput) {
  EXPECT_THROW(cover_footprint({1.0, 1.0, 0.0}, 0), std::invalid_argument);
  EXPECT_THROW(cover_footprint({0.0, 1.0, 0.0}, 1), std::invalid_argument);
}

struct Fixture {
  std::shared_ptr<const ReferencePath> path;
  BeliefModel belief_model;
  StopParams stop;

  Fixture() {
    const std::vector<Vec2> pts{Vec2(0, 0), Vec2(300, 0)};
    path = std::make_shared<ReferencePath>(ReferencePath::from_points(pts));
    belief_model.path = path;
    stop = StopParams::make(2.0, 6.0, 1.0);
  }

  CollisionModel model(int n_agents) const {
    return CollisionModel(path, VehicleBody::rectangle(2.0, 2.0),
                          std::vector<VehicleBody>(n_agents, VehicleBody::rectangle(2.0, 2.0)), 1);
  }
};

std::shared_ptr<const PredictedTrajectory> parked_at(Vec2 p, double var, int steps) {
  auto t = std::make_shared<PredictedTrajectory>();
  for (int k = 0; k < steps; ++k) t->push_back({p, var * Mat2::Identity(), 0.0});
  return t;
}

TEST(GB, NoAgentsIsZero) {
  Fixture f;
  WorldBelief b;
  b.ego.mean = {10.0, 3.0};
  EXPECT_EQ(g_b(b, f.model(0)), 0.0);
  EXPECT_EQ(g_stop_b(b, f.model(0), f.belief_model, f.stop), 0.0);
}

TEST(GB, StoppedBeliefIsSafeEvenWhenOverlapping) {
  Fixture f;
  WorldBelief b;
  b.ego.mean = {10.0, 0.0};
  b.agents.push_back({{{1.0, parked_at(Vec2(10, 0), 0.1, 20)}}});
  EXPECT_EQ(g_b(b, f.model(1)), 0.0);
  b.ego.mean.v = 0.5;
  EXPECT_GT(g_b(b, f.model(1)), 0.0);
}

TEST(GB, MixtureLinearity) {
  Fixture f;
  WorldBelief b;
  b.ego.mean = {20.0, 3.0};
  AgentMixture mix;
  mix.patterns.push_back({0.5, parked_at(Vec2(20, 500), 0.25, 5)});
  mix.patterns.push_back({0.5, parked_at(Vec2(25, 0), 0.25, 5)});
  b.agents.push_back(mix);
  const double r = std::sqrt(2.0);
  const double p = disk_collision_bound(Vec2(20, 0), Mat2::Zero(), r, Vec2(25, 0),
                                        0.25 * Mat2::Identity(), r);
  EXPECT_GT(p, 0.0);
  EXPECT_NEAR(g_b(b, f.model(1)), 0.5 * p, 1e-15);
}

TEST(GB, HorizonExhaustedThrows) {
  Fixture f;
  WorldBelief b;
  b.ego.mean = {20.0, 3.0};
  b.step = 5;
  b.agents.push_back({{{1.0, parked_at(Vec2(25, 0), 0.25, 5)}}});
  EXPECT_THROW(g_b(b, f.model(1)), HorizonExhausted);
}

TEST(FStop, StoppedBeliefStaysPut) {
  Fixture f;
  WorldBelief b;
  b.ego.mean = {7.0, 0.0};
  const WorldBelief n = f_stop_b(b, 3, f.belief_model, f.stop);
  EXPECT_EQ(n.ego.mean, b.ego.mean);
  EXPECT_EQ(n.step, 3);
}

TEST(FStop, OneStepFromTwo) {
  Fixture f;
  WorldBelief b;
  b.ego.mean = {0.0, 2.0};
  const WorldBelief n = f_stop_b(b, 1, f.belief_model, f.stop);
  EXPECT_EQ(n.ego.mean.v, 0.0);
  EXPECT_DOUBLE_EQ(n.ego.mean.s, 1.0);
}

TEST(FStop, FromVmaxReachesStoppedSet) {
  Fixture f;
  WorldBelief b;
  b.ego.mean = {0.0, 6.0};
  b.ego.cov(0, 0) = 0.3;
  const WorldBelief n = f_stop_b(b, f.stop.t_stop, f.belief_model, f.stop);
  EXPECT_TRUE(is_stopped(n.ego));
}

TEST(GStop, StoppedFarFromAgentsIsZero) {
  Fixture f;
  WorldBelief b;
  b.ego.mean = {10.0, 0.0};
  b.agents.push_back({{{1.0, parked_at(Vec2(200, 50), 0.1, 20)}}});
  EXPECT_EQ(g_stop_b(b, f.model(1), f.belief_model, f.stop), 0.0);
}

TEST(GStop, SumsRolloutRisk) {
  Fixture f;
  WorldBelief b;
  b.ego.mean = {10.0, 4.0};
  b.agents.push_back({{{1.0, parked_at(Vec2(18, 0), 1.0, 20)}}});
  const CollisionModel m = f.model(1);
  double expected = 0.0;
  WorldBelief cur = b;
  for (int t = 1; t <= f.stop.t_stop; ++t) {
    cur = open_loop_update(cur, -f.stop.u_stop, f.belief_model);
    expected += g_b(cur, m);
  }
  EXPECT_GT(expected, 0.0);
  EXPECT_DOUBLE_EQ(g_stop_b(b, m, f.belief_model, f.stop), std::min(1.0, expected));
}

}  // namespace
}  // namespace rbrhc
