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

#include "mcmpc/srbd_dynamics.hpp"

#include <random>

#include <gtest/gtest.h>

namespace mcmpc {
namespace {

using namespace srbd;

const Mat3 kInertia = Vec3(0.72, 0.61, 0.21).asDiagonal();
constexpr double kMass = 17.0;

std::vector<ContactFlags> AllFlagCombinations() {
  std::vector<ContactFlags> out;
  for (int bits = 0; bits < 32; ++bits) {
    out.emplace_back(bits & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1,
                     (bits >> 4) & 1);
  }
  return out;
}

SrbdParams Standing() {
  SrbdParams p;
  p.mass = kMass;
  p.inertia_body = kInertia;
  p.feet = {Vec3(0.0, 0.09, 0.0), Vec3(0.0, -0.09, 0.0)};
  return p;
}

TEST(WorldInertiaTest, IdentityRotation) {
  EXPECT_TRUE(world_inertia(kInertia, {}).isApprox(kInertia));
}

TEST(WorldInertiaTest, YawQuarterTurnSwapsAxes) {
  EulerAngles e;
  e.yaw = std::numbers::pi / 2;
  const Mat3 i = world_inertia(Vec3(1.0, 2.0, 3.0).asDiagonal(), e);
  EXPECT_LT((i - Mat3(Vec3(2.0, 1.0, 3.0).asDiagonal())).norm(), 1e-12);
}

TEST(WorldInertiaTest, EigenvaluesPreserved) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  const Vec3 expected = Eigen::SelfAdjointEigenSolver<Mat3>(kInertia).eigenvalues();
  for (int trial = 0; trial < 50; ++trial) {
    const EulerAngles e{u(rng), u(rng), u(rng)};
    const Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(world_inertia(kInertia, e)).eigenvalues();
    EXPECT_LT((ev - expected).norm(), 1e-10);
  }
}

TEST(BuildATest, EulerBlockIdentityAtZero) {
  const MatX a = build_A({});
  EXPECT_TRUE((a.block<3, 3>(kTheta, kOmega).isApprox(Mat3::Identity())));
  EXPECT_TRUE((a.block<3, 3>(kPos, kVel).isApprox(Mat3::Identity())));
  EXPECT_TRUE((a.block<3, 3>(kVel, kGravityState).isApprox(Mat3::Identity())));
}

TEST(BuildATest, PositionColumnsAreZero) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int trial = 0; trial < 20; ++trial) {
    const MatX a = build_A({u(rng), u(rng), u(rng)});
    EXPECT_TRUE(a.middleCols<3>(kPos).isZero(0.0));
    EXPECT_TRUE(a.middleRows<3>(kGravityState).isZero(0.0));
  }
}

TEST(BuildATest, ThrowsAtPitchSingularity) {
  EulerAngles e;
  e.pitch = deg_to_rad(89.9);
  EXPECT_THROW(build_A(e), SingularityError);
}

TEST(BuildATest, FreeFallRollout) {
  const MatX a = build_A({});
  StateVec x0 = RigidBodyState{}.augmented();
  x0[kPos + 2] = 1.0;
  for (double t : {0.1, 0.25, 0.4}) {
    const VecX x = matrix_exponential(a, t) * x0;
    EXPECT_NEAR(x[kPos + 2], 1.0 - 0.5 * kGravity * t * t, 1e-12);
    EXPECT_NEAR(x[kVel + 2], -kGravity * t, 1e-12);
  }
}

TEST(BuildBTest, AllFlagsOffGivesZero) {
  const MatX b = build_B(Vec3(0.1, 0.1, -0.5), Vec3(0.1, -0.1, -0.5), Vec3(0.2, 0, 0), kInertia,
                         kMass, ContactFlags(0, 0, 0, 0, 0));
  EXPECT_TRUE(b.isZero(0.0));
}

TEST(BuildBTest, GatedColumnsExactlyZero) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (const ContactFlags& f : AllFlagCombinations()) {
    const MatX b = build_B(Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)),
                           Vec3(u(rng), u(rng), u(rng)), kInertia, kMass, f);
    EXPECT_TRUE(b.topRows<6>().isZero(0.0));
    for (int n = 0; n < 2; ++n) {
      const bool zero_f = b.middleCols<3>(force_index(n)).isZero(0.0);
      const bool zero_m = b.middleCols<2>(moment_index(n)).isZero(0.0);
      EXPECT_EQ(zero_f, !f.foot[n]);
      EXPECT_EQ(zero_m, !f.foot[n]);
    }
    EXPECT_EQ(b.middleCols<3>(kExternal).isZero(0.0), !f.object);
  }
}

TEST(BuildBTest, SingleStanceGating) {
  const MatX b = build_B(Vec3(0.1, 0.1, -0.5), Vec3(0.1, -0.1, -0.5), Vec3(0.2, 0, 0), kInertia,
                         kMass, ContactFlags(1, 0, 0, 0, 0));
  EXPECT_TRUE(b.middleCols<3>(kForce2).isZero(0.0));
  EXPECT_TRUE(b.middleCols<2>(kMoment2).isZero(0.0));
  EXPECT_TRUE(b.middleCols<3>(kExternal).isZero(0.0));
  EXPECT_FALSE(b.middleCols<3>(kForce1).isZero(0.0));
}

TEST(BuildBTest, LeverArmCrossProduct) {
  // r1 x F for r1 = (0.1, 0, -0.8), F = (0, 0, 1) is (0, -0.1, 0).
  const MatX b = build_B(Vec3(0.1, 0, -0.8), Vec3::Zero(), Vec3::Zero(), Mat3::Identity(), kMass,
                         ContactFlags(1, 0));
  InputVec u = InputVec::Zero();
  u[kForce1 + 2] = 1.0;
  const VecX xdot = b * u;
  EXPECT_LT((xdot.segment<3>(kOmega) - Vec3(0, -0.1, 0)).norm(), 1e-15);
  EXPECT_NEAR(xdot[kVel + 2], 1.0 / kMass, 1e-15);
}

TEST(BuildBTest, LinearRowsIndependentOfGeometry) {
  const ContactFlags f(1, 1, 1);
  const MatX a = build_B(Vec3(0.1, 0.2, -0.5), Vec3(-0.3, 0, -0.5), Vec3(0.2, 0, 0.1), kInertia,
                         kMass, f);
  EulerAngles e{0.1, 0.2, 0.3};
  const MatX b = build_B(Vec3(0.5, -0.2, -0.1), Vec3(0.3, 0.4, -0.7), Vec3(-0.2, 0.3, 0.0),
                         world_inertia(kInertia, e), kMass, f);
  EXPECT_TRUE(a.middleRows<3>(kVel).isApprox(b.middleRows<3>(kVel)));
}

TEST(BuildBTest, ObjectForceActsOnRobotWithOppositeSign) {
  const Vec3 r_e(0.25, 0.0, 0.05);
  const MatX b = build_B(Vec3::Zero(), Vec3::Zero(), r_e, Mat3::Identity(), kMass,
                         ContactFlags(1, 1, 1));
  InputVec u = InputVec::Zero();
  u.segment<3>(kExternal) = Vec3(0, 0, 4.0 * kGravity);
  const VecX xdot = b * u;
  EXPECT_NEAR(xdot[kVel + 2], -4.0 * kGravity / kMass, 1e-14);
  EXPECT_LT((xdot.segment<3>(kOmega) - r_e.cross(Vec3(0, 0, -4.0 * kGravity))).norm(), 1e-13);
}

TEST(BuildBTest, RejectsSingularInertia) {
  EXPECT_THROW(build_B(Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Mat3::Zero(), kMass, {}),
               ModelError);
}

TEST(StaticBalanceTest, EquilibriumWrenchGivesZeroDerivative) {
  const Vec3 p_c(0.0, 0.0, 0.53);
  const Vec3 r1 = Vec3(0.0, 0.09, 0.0) - p_c, r2 = Vec3(0.0, -0.09, 0.0) - p_c;
  const MatX a = build_A({});
  const MatX b = build_B(r1, r2, Vec3::Zero(), kInertia, kMass, ContactFlags(1, 1));
  RigidBodyState s;
  s.p = p_c;
  InputVec u = InputVec::Zero();
  u[kForce1 + 2] = u[kForce2 + 2] = 0.5 * kMass * kGravity;
  const VecX xdot = a * s.augmented() + b * u;
  EXPECT_LT(xdot.norm(), 1e-12);
}

TEST(DiscretizeTest, ZeroAGivesScaledB) {
  ContinuousSS ss{MatX::Zero(kStateDim, kStateDim),
                  build_B(Vec3(0.1, 0.1, -0.5), Vec3(0.1, -0.1, -0.5), Vec3::Zero(), kInertia,
                          kMass, ContactFlags(1, 1))};
  const DiscreteSS d = discretize(ss, 0.03);
  EXPECT_LT((d.a - MatX::Identity(kStateDim, kStateDim)).norm(), 1e-14);
  EXPECT_LT((d.b - ss.b * 0.03).norm(), 1e-14);
  EXPECT_THROW(discretize(ss, 0.0), std::invalid_argument);
}

TEST(DiscretizeTest, EulerCloseToZeroOrderHold) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const EulerAngles e{0.05, -0.1, 0.4};
  // Feet directly below the CoM so the nominal wrench is balanced.
  ContinuousSS ss{build_A(e), build_B(Vec3(0.0, 0.09, -0.53), Vec3(0.0, -0.09, -0.53),
                                      Vec3(0.22, 0, 0.05), world_inertia(kInertia, e), kMass,
                                      ContactFlags(1, 1, 1))};
  const DiscreteSS zoh = discretize(ss, 0.03);
  const DiscreteSS euler = discretize(ss, 0.03, Discretization::kEuler);
  for (int trial = 0; trial < 20; ++trial) {
    RigidBodyState s;
    s.theta = e;
    s.p = Vec3(0, 0, 0.53);
    s.omega = Vec3(u(rng), u(rng), u(rng)) * 0.5;
    s.v = Vec3(u(rng), u(rng), u(rng)) * 0.5;
    // Equilibrium wrench plus a bounded perturbation; the per-step gap is
    // about dt^2 / 2 times the resulting acceleration.
    InputVec in;
    for (int i = 0; i < kInputDim; ++i) in[i] = (i < kMoment1 ? 0.5 : 0.05) * u(rng);
    in[kForce1 + 2] += 0.5 * kMass * kGravity;
    in[kForce2 + 2] += 0.5 * kMass * kGravity;
    in.segment<3>(kExternal).setZero();
    const StateVec x = s.augmented();
    const VecX diff = (zoh.a * x + zoh.b * in) - (euler.a * x + euler.b * in);
    EXPECT_LT(diff.norm(), 1e-3);
  }
}

TEST(DiscretizeTest, ZeroOrderHoldSemigroup) {
  const EulerAngles e{0.1, 0.2, -0.3};
  ContinuousSS ss{build_A(e), build_B(Vec3(0.05, 0.09, -0.53), Vec3(0.05, -0.09, -0.53),
                                      Vec3(0.22, 0, 0.05), world_inertia(kInertia, e), kMass,
                                      ContactFlags(1, 1, 1))};
  const DiscreteSS one = discretize(ss, 0.03);
  const DiscreteSS two = discretize(ss, 0.06);
  EXPECT_LT((one.a * one.a - two.a).norm(), 1e-9);
  EXPECT_LT((one.a * one.b + one.b - two.b).norm(), 1e-9);
}

TEST(OracleTest, StaticEquilibriumUnchanged) {
  SrbdParams p = Standing();
  RigidBodyState s;
  s.p = Vec3(0, 0, 0.53);
  InputVec u = InputVec::Zero();
  u[kForce1 + 2] = u[kForce2 + 2] = 0.5 * kMass * kGravity;
  const StateVec x = s.augmented();
  const StateVec y = srbd_step_oracle(x, u, p, ContactFlags(1, 1), 0.03);
  EXPECT_LT((y - x).norm(), 1e-9);
}

TEST(OracleTest, ZeroInputFreeFall) {
  RigidBodyState s;
  s.p = Vec3(0, 0, 0.53);
  s.v = Vec3(0.2, 0, 1.0);
  const StateVec y =
      srbd_step_oracle(s.augmented(), InputVec::Zero(), Standing(), ContactFlags(1, 1), 0.1);
  EXPECT_NEAR(y[kPos + 2], 0.53 + 0.1 - 0.5 * kGravity * 0.01, 1e-12);
  EXPECT_NEAR(y[kPos], 0.02, 1e-12);
  EXPECT_NEAR(y[kVel + 2], 1.0 - kGravity * 0.1, 1e-12);
}

TEST(OracleTest, LinearizedRolloutErrorIsSecondOrder) {
  const SrbdParams p = Standing();
  RigidBodyState eq;
  eq.p = Vec3(0, 0, 0.53);
  InputVec u = InputVec::Zero();
  u[kForce1 + 2] = u[kForce2 + 2] = 0.5 * kMass * kGravity;
  const ContactFlags f(1, 1);
  const DiscreteSS d =
      discretize({build_A(eq.theta), build_B(p.feet[0] - eq.p, p.feet[1] - eq.p, Vec3::Zero(),
                                             kInertia, kMass, f)},
                 0.03);
  // Lever arms are frozen in the linear model, so the CoM is held in place.
  auto rollout_error = [&](double scale) {
    RigidBodyState s = eq;
    s.theta = EulerAngles{0.02 * scale, -0.03 * scale, 0.01 * scale};
    s.omega = Vec3(0.1, -0.05, 0.05) * scale;
    StateVec lin = s.augmented(), truth = lin;
    for (int i = 0; i < 20; ++i) {
      lin = d.a * lin + d.b * u;
      truth = srbd_step_oracle(truth, u, p, f, 0.03);
    }
    return std::pair((lin - truth).norm(), (truth - eq.augmented()).norm());
  };
  const auto [e1, dev1] = rollout_error(1.0);
  const auto [e2, dev2] = rollout_error(0.5);
  EXPECT_LT(e1, 0.05 * dev1);
  EXPECT_GT(e1 / e2, 3.5);
  EXPECT_LT(e1 / e2, 4.5);
}

}  // namespace
}  // namespace mcmpc
