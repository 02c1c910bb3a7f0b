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

#include "mcmpc/plant_sim.hpp"

#include <random>

#include <gtest/gtest.h>

namespace mcmpc {
namespace {

const RobotModel& Humanoid() {
  static const RobotModel m = load_model(data_path("models/humanoid.json"));
  return m;
}

VecX ZeroTorque() { return VecX::Zero(Humanoid().num_actuated()); }

// Object centered between the hands of `q`.
ObjectState AtGrasp(const VecX& q) {
  const TreeKinematics k = forward_kinematics(Humanoid().tree, q);
  ObjectState o;
  for (int h = 0; h < 2; ++h) {
    const HandFrame& hand = Humanoid().body.hands[h];
    o.p += 0.5 * point_position(k, Humanoid().tree.find_link(hand.link), hand.point);
  }
  return o;
}

TEST(PlantStepTest, FreeFallAcceleration) {
  Plant plant(Humanoid(), ObjectParams::box(2.0, Vec3(0.2, 0.3, 0.2)));
  VecX q = standing_pose(Humanoid());
  q[2] = 5.0;
  const PlantState s0 = plant.initial_state(q, ObjectState{Vec3(3, 0, 0.1)});
  const double dt = 5e-4;
  const PlantState s1 = plant.step(s0, ZeroTorque(), dt);
  VecX qdd = s1.joints.dq / dt;
  EXPECT_NEAR(qdd[2], -kGravity, 1e-6);
  qdd[2] = 0.0;
  EXPECT_LT(qdd.norm(), 1e-6);
  for (const ContactSample& c : s1.contacts) EXPECT_TRUE(c.force.isZero(0.0));
}

TEST(PlantStepTest, PassiveEnergyConserved) {
  PlantConfig cfg;
  cfg.contact = false;
  cfg.integrator = Integrator::kRk4;
  cfg.dt = 2e-4;
  Plant plant(Humanoid(), ObjectParams{}, cfg);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PlantState s = plant.initial_state(standing_pose(Humanoid()));
  for (int i = 0; i < s.joints.dq.size(); ++i) s.joints.dq[i] = 0.5 * u(rng);
  const double e0 = plant.total_energy(s);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    s = plant.step(s, ZeroTorque(), cfg.dt);
    if (i % 100 == 99) worst = std::max(worst, std::abs(plant.total_energy(s) - e0));
  }
  EXPECT_NEAR(s.time, 2.0, 1e-9);
  EXPECT_LT(worst / std::abs(e0), 1e-5);
}

// Joint PD hold on the crouched pose, feet on the ground.
PlantState HoldStanding(const Plant& plant, double seconds, double* max_pen, double* max_ratio) {
  const RobotModel& m = plant.model();
  const VecX q_des = standing_pose(m);
  PlantState s = plant.initial_state(q_des, ObjectState{Vec3(2, 0, 0.1)});
  s.joints.q[2] += 0.001;
  const int steps = static_cast<int>(std::round(seconds / plant.config().dt));
  *max_pen = 0.0;
  *max_ratio = 0.0;
  for (int i = 0; i < steps; ++i) {
    const VecX e = (q_des - s.joints.q).tail(m.num_actuated());
    const VecX tau = 300.0 * e - 1.0 * s.joints.dq.tail(m.num_actuated());
    s = plant.step(s, tau, plant.config().dt);
    for (const ContactSample& c : s.contacts) {
      *max_pen = std::max(*max_pen, c.penetration);
      if (c.force.z() > 0.0) {
        *max_ratio = std::max(*max_ratio, c.force.head<2>().norm() / c.force.z());
      } else {
        EXPECT_TRUE(c.force.isZero(0.0));
      }
    }
  }
  return s;
}

TEST(PlantStepTest, StandingPenetrationAndFriction) {
  Plant plant(Humanoid(), ObjectParams{});
  double pen = 0.0, ratio = 0.0;
  const PlantState s = HoldStanding(plant, 1.0, &pen, &ratio);
  EXPECT_LT(pen, 2e-3);
  EXPECT_LE(ratio, plant.config().ground.friction + 1e-12);
  const Measurement m = plant.measure(s);
  EXPECT_LT(std::abs(m.body.theta.pitch), 0.1);
  EXPECT_GT(m.body.p.z(), 0.45);
}

TEST(PlantStepTest, FrictionSaturatesWhenSliding) {
  Plant plant(Humanoid(), ObjectParams{});
  PlantState s = plant.initial_state(standing_pose(Humanoid()));
  s.joints.q[2] -= 0.002;
  s.joints.dq[0] = 2.0;
  s = plant.step(s, ZeroTorque(), plant.config().dt);
  int sliding = 0;
  for (const ContactSample& c : s.contacts) {
    ASSERT_GT(c.force.z(), 0.0);
    EXPECT_LE(c.force.head<2>().norm(), plant.config().ground.friction * c.force.z() * (1 + 1e-12));
    if (c.force.head<2>().norm() > plant.config().ground.friction * c.force.z() * (1 - 1e-12)) {
      ++sliding;
    }
    EXPECT_LT(c.force.x(), 0.0);
  }
  EXPECT_EQ(sliding, 8);
}

TEST(PlantStepTest, TorquesClipped) {
  Plant plant(Humanoid(), ObjectParams{});
  VecX tau = VecX::Constant(Humanoid().num_actuated(), 500.0);
  const VecX out = plant.actuate(tau, VecX::Zero(Humanoid().num_dofs()));
  for (int j = 0; j < out.size(); ++j) {
    EXPECT_EQ(out[j], Humanoid().limits.torque_max[j]);
  }
  EXPECT_EQ(plant.actuate(-tau, VecX::Zero(Humanoid().num_dofs()))[3], -67.0);
}

TEST(PlantStepTest, BlowUpReportsTime) {
  Plant plant(Humanoid(), ObjectParams{});
  PlantState s = plant.initial_state(standing_pose(Humanoid()));
  s.time = 1.25;
  s.joints.dq[7] = std::numeric_limits<double>::quiet_NaN();
  try {
    plant.step(s, ZeroTorque(), 5e-4);
    FAIL() << "expected blow-up";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("t = 1.2505"), std::string::npos) << e.what();
  }
}

TEST(PlantStepTest, RejectsLargeStep) {
  Plant plant(Humanoid(), ObjectParams{});
  const PlantState s = plant.initial_state(standing_pose(Humanoid()));
  EXPECT_THROW(plant.step(s, ZeroTorque(), 2e-3), std::invalid_argument);
  PlantConfig cfg;
  cfg.ground.stiffness = -1.0;
  EXPECT_THROW(Plant(Humanoid(), ObjectParams{}, cfg), ConfigError);
}

TEST(ObjectFlightTest, MatchesBallistics) {
  Plant plant(Humanoid(), ObjectParams::sphere(2.0, 0.08));
  const Vec3 p0(1.0, 0.5, 0.6), v0(0.7, -0.2, 2.5);
  PlantState s =
      plant.initial_state(standing_pose(Humanoid()), ObjectState{p0, Mat3::Identity(), v0});
  s.joints.q[2] += 2.0;  // keep the robot out of the way
  const double dt = 5e-4;
  double worst = 0.0;
  for (int i = 1; i <= 1200; ++i) {
    s = plant.step(s, ZeroTorque(), dt);
    const double t = i * dt;
    const Vec3 p = p0 + v0 * t + 0.5 * t * t * Vec3(0, 0, -kGravity);
    if (p.z() <= 0.08) break;
    worst = std::max(worst, (s.object.p - p).norm());
    worst = std::max(worst, (s.object.v - (v0 + t * Vec3(0, 0, -kGravity))).norm());
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(ObjectFlightTest, RestsOnGround) {
  Plant plant(Humanoid(), ObjectParams::box(4.0, Vec3(0.2, 0.3, 0.2)));
  PlantState s = plant.initial_state(standing_pose(Humanoid()), ObjectState{Vec3(1, 0, 0.2)});
  s.joints.q[2] += 100.0;
  for (int i = 0; i < 2000; ++i) s = plant.step(s, ZeroTorque(), 5e-4);
  EXPECT_NEAR(s.object.p.z(), 0.1, 1e-3);
  EXPECT_LT(s.object.v.norm(), 1e-2);
}

TEST(AttachTest, RoundTripAtRest) {
  Plant plant(Humanoid(), ObjectParams::box(4.0, Vec3(0.2, 0.3, 0.2)));
  const VecX q = standing_pose(Humanoid());
  ObjectState o = AtGrasp(q);
  o.p.x() += 0.01;
  o.r = rotation_z(0.3);
  const PlantState s0 = plant.initial_state(q, o);
  const PlantState s1 = plant.detach_object(plant.attach_object(s0));
  EXPECT_FALSE(s1.attached);
  EXPECT_LT((s1.object.p - o.p).norm(), 1e-12);
  EXPECT_LT((s1.object.r - o.r).norm(), 1e-12);
  EXPECT_LT(s1.object.v.norm(), 1e-12);
  EXPECT_LT(s1.joints.dq.norm(), 1e-12);
}

TEST(AttachTest, OutOfReach) {
  Plant plant(Humanoid(), ObjectParams::box(4.0, Vec3(0.2, 0.3, 0.2)));
  const VecX q = standing_pose(Humanoid());
  ObjectState o = AtGrasp(q);
  o.p.x() += 0.06;
  EXPECT_THROW(plant.attach_object(plant.initial_state(q, o)), std::runtime_error);
}

TEST(AttachTest, DetachInheritsHandVelocity) {
  Plant plant(Humanoid(), ObjectParams::box(4.0, Vec3(0.2, 0.3, 0.2)));
  const VecX q = standing_pose(Humanoid());
  PlantState s = plant.attach_object(plant.initial_state(q, AtGrasp(q)));
  s.joints.dq.setZero();
  s.joints.dq[0] = 1.0;
  const PlantState d = plant.detach_object(s);
  EXPECT_LT((d.object.v - Vec3(1, 0, 0)).norm(), 1e-12);
}

TEST(AttachTest, MomentumContinuous) {
  Plant plant(Humanoid(), ObjectParams::box(4.0, Vec3(0.2, 0.3, 0.2)));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const VecX q = standing_pose(Humanoid());
  PlantState s = plant.initial_state(q, AtGrasp(q));
  for (int i = 0; i < s.joints.dq.size(); ++i) s.joints.dq[i] = 0.3 * u(rng);
  s.object.v = Vec3(0.2, -0.1, 0.4);
  s.object.omega = Vec3(0.0, 0.5, 0.1);
  const Vec6 before = plant.total_momentum(s);
  const PlantState a = plant.attach_object(s);
  const Vec6 after = plant.total_momentum(a);
  EXPECT_LT((before - after).norm(), 1e-9) << before.transpose() << "\n" << after.transpose();
  // Detaching is momentum-neutral as well.
  EXPECT_LT((plant.total_momentum(plant.detach_object(a)) - after).norm(), 1e-9);
}

TEST(AttachTest, CarriedObjectFollowsHands) {
  Plant plant(Humanoid(), ObjectParams::box(4.0, Vec3(0.2, 0.3, 0.2)));
  const VecX q = standing_pose(Humanoid());
  PlantState s = plant.attach_object(plant.initial_state(q, AtGrasp(q)));
  s.joints.q[2] += 1.0;  // airborne
  s.joints.dq[2] = 1.0;
  for (int i = 0; i < 200; ++i) s = plant.step(s, ZeroTorque(), 5e-4);
  const Measurement m = plant.measure(s);
  EXPECT_LT((s.object.p - 0.5 * (m.hands[0] + m.hands[1])).norm(), 1e-9);
  // System CoM of robot plus object follows the ballistic law.
  const double t = s.time;
  EXPECT_NEAR(s.object.v.z(), 1.0 - kGravity * t, 1e-9);
}

TEST(MeasureTest, UprightRest) {
  Plant plant(Humanoid(), ObjectParams{});
  const Measurement m = plant.measure(plant.initial_state(standing_pose(Humanoid())));
  EXPECT_LT(m.body.theta.vector().norm(), 1e-15);
  EXPECT_LT(m.body.v.norm(), 1e-15);
  EXPECT_LT(m.body.omega.norm(), 1e-15);
}

TEST(MeasureTest, LeanFixture) {
  Plant plant(Humanoid(), ObjectParams{});
  VecX q = standing_pose(Humanoid());
  q[4] = 0.15;
  q[3] = -0.05;
  const Measurement m = plant.measure(plant.initial_state(q));
  EXPECT_DOUBLE_EQ(m.body.theta.pitch, 0.15);
  EXPECT_DOUBLE_EQ(m.body.theta.roll, -0.05);
}

TEST(MeasureTest, FeetMatchForwardKinematics) {
  Plant plant(Humanoid(), ObjectParams{});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  VecX q = standing_pose(Humanoid());
  for (int i = 0; i < q.size(); ++i) q[i] += u(rng);
  const Measurement m = plant.measure(plant.initial_state(q));
  const TreeKinematics k = forward_kinematics(Humanoid().tree, q);
  for (int s = 0; s < 2; ++s) {
    const FootGeometry& f = Humanoid().body.feet[s];
    const Vec3 p = point_position(k, Humanoid().tree.find_link(f.link), f.sole);
    EXPECT_LT((m.feet[s] - p).norm(), 1e-10);
  }
  const Mat3 r = rotation_from_euler(m.body.theta);
  EXPECT_LT((r - k.rotation[Humanoid().tree.root_link]).norm(), 1e-12);
}

}  // namespace
}  // namespace mcmpc
