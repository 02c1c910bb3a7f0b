// Copyright 2026 The mcmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mcmpc/swing_hand_pd.hpp"

#include <random>

#include <gtest/gtest.h>

namespace mcmpc {
namespace {

TEST(FootPlacementTest, StationaryUnderHip) {
  const Vec3 p = foot_placement(Vec3(0.3, -0.2, 0.53), Vec3::Zero(), Vec3::Zero(), 0.4, 0.03,
                                Vec3(0, 0.09, 0));
  EXPECT_LT((p - Vec3(0.3, -0.11, 0.0)).norm(), 1e-15);
}

TEST(FootPlacementTest, MatchingVelocityAdvancesHalfPeriod) {
  const Vec3 v(0.2, 0, 0);
  const Vec3 p = foot_placement(Vec3(0, 0, 0.53), v, v, 0.3);
  EXPECT_NEAR(p.x(), 0.03, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
  EXPECT_EQ(p.z(), 0.0);
}

TEST(FootPlacementTest, OverspeedShiftsAlongVelocity) {
  const Vec3 p_c(0, 0, 0.53), des(0.2, 0, 0);
  const Vec3 nominal = foot_placement(p_c, des, des, 0.3);
  const Vec3 fast = foot_placement(p_c, Vec3(0.4, 0, 0), des, 0.3);
  EXPECT_GT(fast.x() - nominal.x(), 0.03 + 0.03 * 0.2 - 1e-12);
}

TEST(FootPlacementTest, HipOffsetFollowsHeading) {
  const Vec3 p = foot_placement(Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 0.4, 0.03,
                                Vec3(0, 0.09, 0), std::numbers::pi / 2);
  EXPECT_NEAR(p.x(), -0.09, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
}

TEST(FootPlacementTest, TranslationEquivariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 pc(u(rng), u(rng), 0.5), v(u(rng), u(rng), 0), vd(u(rng), u(rng), 0);
    const Vec3 shift(u(rng), u(rng), 0.0);
    const Vec3 a = foot_placement(pc, v, vd, 0.4) + shift;
    const Vec3 b = foot_placement(pc + shift, v, vd, 0.4);
    EXPECT_LT((a - b).norm(), 1e-14);
  }
}

TEST(FootPlacementTest, RejectsNonPositivePeriod) {
  EXPECT_THROW(foot_placement(Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 0.0),
               std::invalid_argument);
}

TEST(CartesianPdTest, ZeroErrorZeroForce) {
  const Vec3 p(0.1, 0.2, 0.3), v(1, 2, 3);
  EXPECT_TRUE(swing_force(p, v, p, v, PdGains{}).isZero(0.0));
  EXPECT_TRUE(hand_force(p, v, p, v, PdGains{}).isZero(0.0));
}

TEST(CartesianPdTest, PurePositionError) {
  PdGains g;
  g.kp = Vec3::Constant(500.0);
  const Vec3 e(0.01, -0.02, 0.03);
  EXPECT_LT((swing_force(e, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), g) - 500.0 * e).norm(),
            1e-12);
}

TEST(CartesianPdTest, ReachAheadPushesForward) {
  const Vec3 f = hand_force(Vec3(0.1, 0, 0), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), PdGains{});
  EXPECT_GT(f.x(), 0.0);
  EXPECT_EQ(f.y(), 0.0);
  EXPECT_EQ(f.z(), 0.0);
}

TEST(CartesianPdTest, MirroredHands) {
  const Vec3 p_left(0.2, 0.16, 0.4), p_right(0.2, -0.16, 0.4);
  const Vec3 des_left(0.3, 0.12, 0.45), des_right(0.3, -0.12, 0.45);
  const Vec3 fl = hand_force(des_left, Vec3::Zero(), p_left, Vec3(0, 0.1, 0), PdGains{});
  const Vec3 fr = hand_force(des_right, Vec3::Zero(), p_right, Vec3(0, -0.1, 0), PdGains{});
  EXPECT_NEAR(fl.x(), fr.x(), 1e-12);
  EXPECT_NEAR(fl.y(), -fr.y(), 1e-12);
  EXPECT_NEAR(fl.z(), fr.z(), 1e-12);
}

TEST(CartesianPdTest, Superposition) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  PdGains g;
  g.kp = Vec3(300, 400, 500);
  g.kd = Vec3(10, 20, 30);
  auto rnd = [&] { return Vec3(u(rng), u(rng), u(rng)); };
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 e1 = rnd(), e2 = rnd(), d1 = rnd(), d2 = rnd();
    const Vec3 sum = swing_force(e1 + e2, d1 + d2, Vec3::Zero(), Vec3::Zero(), g);
    const Vec3 sep = swing_force(e1, d1, Vec3::Zero(), Vec3::Zero(), g) +
                     swing_force(e2, d2, Vec3::Zero(), Vec3::Zero(), g);
    EXPECT_LT((sum - sep).norm(), 1e-12);
  }
}

TEST(CartesianPdTest, CriticallyDampedStepOvershoot) {
  const double m = 0.5, kp = 500.0;
  PdGains g;
  g.kp = Vec3::Constant(kp);
  g.kd = Vec3::Constant(2.0 * std::sqrt(kp * m));
  // RK4 integration of m x'' = f(x, x') toward a step target.
  Vec3 x = Vec3::Zero(), v = Vec3::Zero();
  const Vec3 target(0.1, 0.1, 0.1);
  const double h = 1e-4;
  double peak = 0.0;
  auto acc = [&](const Vec3& xx, const Vec3& vv) -> Vec3 {
    return swing_force(target, Vec3::Zero(), xx, vv, g) / m;
  };
  for (int i = 0; i < 20000; ++i) {
    const Vec3 k1v = acc(x, v), k1x = v;
    const Vec3 k2v = acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v), k2x = v + 0.5 * h * k1v;
    const Vec3 k3v = acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v), k3x = v + 0.5 * h * k2v;
    const Vec3 k4v = acc(x + h * k3x, v + h * k3v), k4x = v + h * k3v;
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    peak = std::max(peak, x.x());
  }
  EXPECT_NEAR(x.x(), 0.1, 1e-6);
  EXPECT_LT(peak, 0.1 * 1.05);
}

TEST(SwingTrajectoryTest, Endpoints) {
  SwingPlan plan;
  plan.start = Vec3(0.0, 0.09, 0.0);
  plan.target = Vec3(0.12, 0.1, 0.0);
  const SwingReference a = swing_trajectory(plan, 0.0), b = swing_trajectory(plan, 1.0);
  EXPECT_LT((a.p - plan.start).norm(), 1e-15);
  EXPECT_LT((b.p - plan.target).norm(), 1e-15);
  EXPECT_LT(a.v.norm(), 1e-15);
  EXPECT_LT(b.v.norm(), 1e-12);
}

TEST(SwingTrajectoryTest, ApexHeight) {
  SwingPlan plan;
  plan.start = Vec3(0.0, 0.09, 0.0);
  plan.target = Vec3(0.15, 0.09, 0.0);
  double zmax = 0.0, zmin = 1.0;
  for (int i = 0; i <= 10000; ++i) {
    const double z = swing_trajectory(plan, i / 10000.0).p.z();
    zmax = std::max(zmax, z);
    zmin = std::min(zmin, z);
  }
  EXPECT_NEAR(zmax, 0.08, 1e-6);
  EXPECT_GE(zmin, 0.0);
}

TEST(SwingTrajectoryTest, DerivativesMatchFiniteDifferences) {
  SwingPlan plan;
  plan.start = Vec3(-0.05, 0.09, 0.01);
  plan.target = Vec3(0.1, 0.12, 0.0);
  plan.duration = 0.25;
  const double h = 1e-6;
  for (double s : {0.1, 0.3, 0.5, 0.77, 0.9}) {
    const SwingReference r = swing_trajectory(plan, s);
    const SwingReference fwd = swing_trajectory(plan, s + h), bwd = swing_trajectory(plan, s - h);
    const Vec3 v_fd = (fwd.p - bwd.p) / (2 * h * plan.duration);
    const Vec3 a_fd = (fwd.v - bwd.v) / (2 * h * plan.duration);
    EXPECT_LT((r.v - v_fd).norm(), 1e-6) << s;
    EXPECT_LT((r.a - a_fd).norm(), 1e-4) << s;
  }
}

TEST(SwingTrajectoryTest, RejectsPhaseOutOfRange) {
  EXPECT_THROW(swing_trajectory(SwingPlan{}, -0.01), std::invalid_argument);
  EXPECT_THROW(swing_trajectory(SwingPlan{}, 1.01), std::invalid_argument);
}

TEST(PdGainsTest, RejectsNegative) {
  PdGains g;
  g.kd[1] = -1.0;
  EXPECT_THROW(g.validate(), ConfigError);
}

}  // namespace
}  // namespace mcmpc
