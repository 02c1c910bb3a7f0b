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

// Single-rigid-body dynamics with scheduled foot and object contacts.
//
// State (15): [Theta; p_c; omega; p_c_dot; g], with the constant gravity
// vector carried as a dummy state so the affine model becomes linear.
// Input (13): [F1; F2; M1; M2; F_ext], M_n = (M_ny, M_nz). F_ext is the
// force the hands apply to the carried object, so it acts on the robot
// with the opposite sign.

#ifndef MCMPC_SRBD_DYNAMICS_HPP_
#define MCMPC_SRBD_DYNAMICS_HPP_

#include <array>

#include "mcmpc/common.hpp"
#include "mcmpc/contact_schedule.hpp"
#include "mcmpc/spatial_math.hpp"

namespace mcmpc {

namespace srbd {
inline constexpr int kTheta = 0;
inline constexpr int kPos = 3;
inline constexpr int kOmega = 6;
inline constexpr int kVel = 9;
inline constexpr int kGravityState = 12;
inline constexpr int kStateDim = 15;

inline constexpr int kForce1 = 0;
inline constexpr int kForce2 = 3;
inline constexpr int kMoment1 = 6;
inline constexpr int kMoment2 = 8;
inline constexpr int kExternal = 10;
inline constexpr int kInputDim = 13;

inline int force_index(int foot) { return foot == 0 ? kForce1 : kForce2; }
inline int moment_index(int foot) { return foot == 0 ? kMoment1 : kMoment2; }

inline Vec3 gravity_vector() { return {0.0, 0.0, -kGravity}; }
}  // namespace srbd

using StateVec = Eigen::Matrix<double, srbd::kStateDim, 1>;
using InputVec = Eigen::Matrix<double, srbd::kInputDim, 1>;

struct RigidBodyState {
  EulerAngles theta;
  Vec3 p = Vec3::Zero();
  Vec3 omega = Vec3::Zero();  // world frame
  Vec3 v = Vec3::Zero();

  StateVec augmented() const {
    StateVec x;
    x << theta.vector(), p, omega, v, srbd::gravity_vector();
    return x;
  }

  static RigidBodyState from_vector(const Eigen::Ref<const VecX>& x) {
    RigidBodyState s;
    s.theta = EulerAngles::from_vector(x.segment<3>(srbd::kTheta));
    s.p = x.segment<3>(srbd::kPos);
    s.omega = x.segment<3>(srbd::kOmega);
    s.v = x.segment<3>(srbd::kVel);
    return s;
  }
};

// Moment selection: M_n = (M_y, M_z) -> (0, M_y, M_z).
inline Eigen::Matrix<double, 3, 2> moment_selection() {
  Eigen::Matrix<double, 3, 2> l = Eigen::Matrix<double, 3, 2>::Zero();
  l(1, 0) = 1.0;
  l(2, 1) = 1.0;
  return l;
}

inline Mat3 world_inertia(const Mat3& inertia_body, const EulerAngles& theta) {
  const Mat3 r = rotation_from_euler(theta);
  return r * inertia_body * r.transpose();
}

struct ContinuousSS {
  MatX a;  // 15 x 15
  MatX b;  // 15 x 13
};

struct DiscreteSS {
  MatX a;
  MatX b;
};

enum class Discretization { kZeroOrderHold, kEuler };

inline MatX build_A(const EulerAngles& theta, double pitch_margin = kDefaultPitchMargin) {
  using namespace srbd;
  MatX a = MatX::Zero(kStateDim, kStateDim);
  a.block<3, 3>(kTheta, kOmega) = euler_rate_matrix_inverse(theta, pitch_margin);
  a.block<3, 3>(kPos, kVel) = Mat3::Identity();
  a.block<3, 3>(kVel, kGravityState) = Mat3::Identity();
  return a;
}

// r1, r2: CoM to foot n; r_e: CoM to object CoM; all world frame.
inline MatX build_B(const Vec3& r1, const Vec3& r2, const Vec3& r_e, const Mat3& inertia_world,
                    double mass, const ContactFlags& flags) {
  using namespace srbd;
  if (!(mass > 0.0)) throw ModelError("build_B: mass must be positive");
  const Eigen::LLT<Mat3> llt(inertia_world);
  if (llt.info() != Eigen::Success || !inertia_world.isApprox(inertia_world.transpose())) {
    throw ModelError("build_B: world inertia is not symmetric positive-definite");
  }
  Eigen::Matrix<double, 3, kInputDim> torque = Eigen::Matrix<double, 3, kInputDim>::Zero();
  Eigen::Matrix<double, 3, kInputDim> force = Eigen::Matrix<double, 3, kInputDim>::Zero();
  const std::array<Vec3, 2> r{r1, r2};
  for (int n = 0; n < 2; ++n) {
    if (!flags.foot[n]) continue;
    torque.block<3, 3>(0, force_index(n)) = skew(r[n]);
    torque.block<3, 2>(0, moment_index(n)) = moment_selection();
    force.block<3, 3>(0, force_index(n)) = Mat3::Identity() / mass;
  }
  if (flags.object) {
    torque.block<3, 3>(0, kExternal) = -skew(r_e);
    force.block<3, 3>(0, kExternal) = -Mat3::Identity() / mass;
  }
  MatX b = MatX::Zero(kStateDim, kInputDim);
  b.block<3, kInputDim>(kOmega, 0) = llt.solve(torque);
  b.block<3, kInputDim>(kVel, 0) = force;
  return b;
}

inline DiscreteSS discretize(const ContinuousSS& ss, double dt,
                             Discretization method = Discretization::kZeroOrderHold) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize: dt must be positive");
  const Eigen::Index n = ss.a.rows(), m = ss.b.cols();
  if (ss.a.cols() != n || ss.b.rows() != n) {
    throw std::invalid_argument("discretize: inconsistent dimensions");
  }
  DiscreteSS d;
  if (method == Discretization::kEuler) {
    d.a = MatX::Identity(n, n) + ss.a * dt;
    d.b = ss.b * dt;
    return d;
  }
  MatX aug = MatX::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = ss.a;
  aug.topRightCorner(n, m) = ss.b;
  // The rigid-body chains are short, so the series often terminates.
  const MatX m1 = aug * dt;
  const MatX m2 = m1 * m1;
  const MatX e = (m2 * m1).isZero(0.0)
                     ? MatX(MatX::Identity(n + m, n + m) + m1 + 0.5 * m2)
                     : matrix_exponential(aug, dt);
  d.a = e.topLeftCorner(n, n);
  d.b = e.topRightCorner(n, m);
  return d;
}

// Physical parameters for the nonlinear single-body model.
struct SrbdParams {
  double mass = 17.0;
  Mat3 inertia_body = Mat3::Identity();
  std::array<Vec3, 2> feet{Vec3::Zero(), Vec3::Zero()};  // world foot positions
  Vec3 object_offset_body = Vec3::Zero();  // CoM to object CoM, trunk frame
  double pitch_margin = kDefaultPitchMargin;
};

// Nonlinear state derivative: world-frame angular momentum balance
// d(I_G w)/dt = sum of moments, with lever arms evaluated at the current
// configuration.
inline StateVec srbd_derivative(const StateVec& x, const InputVec& u, const SrbdParams& params,
                                const ContactFlags& flags) {
  using namespace srbd;
  const RigidBodyState s = RigidBodyState::from_vector(x);
  const Mat3 r = rotation_from_euler(s.theta);
  const Mat3 i_world = r * params.inertia_body * r.transpose();
  Vec3 force = Vec3::Zero(), moment = Vec3::Zero();
  for (int n = 0; n < 2; ++n) {
    if (!flags.foot[n]) continue;
    const Vec3 f = u.segment<3>(force_index(n));
    force += f;
    moment += (params.feet[n] - s.p).cross(f) + moment_selection() * u.segment<2>(moment_index(n));
  }
  if (flags.object) {
    const Vec3 f = -u.segment<3>(kExternal);
    force += f;
    moment += (r * params.object_offset_body).cross(f);
  }
  StateVec dx = StateVec::Zero();
  dx.segment<3>(kTheta) = euler_rates(s.theta, s.omega, params.pitch_margin);
  dx.segment<3>(kPos) = s.v;
  dx.segment<3>(kOmega) = i_world.llt().solve(moment - s.omega.cross(i_world * s.omega));
  dx.segment<3>(kVel) = force / params.mass + x.segment<3>(kGravityState);
  return dx;
}

// Classical RK4 over `substeps` equal sub-intervals with the input held.
inline StateVec srbd_step_oracle(const StateVec& x, const InputVec& u, const SrbdParams& params,
                                 const ContactFlags& flags, double dt, int substeps = 10) {
  if (!(dt > 0.0) || substeps < 1) throw std::invalid_argument("srbd_step_oracle: bad step");
  const double h = dt / substeps;
  StateVec y = x;
  for (int i = 0; i < substeps; ++i) {
    const StateVec k1 = srbd_derivative(y, u, params, flags);
    const StateVec k2 = srbd_derivative(y + 0.5 * h * k1, u, params, flags);
    const StateVec k3 = srbd_derivative(y + 0.5 * h * k2, u, params, flags);
    const StateVec k4 = srbd_derivative(y + h * k3, u, params, flags);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!y.allFinite()) throw NumericalError("srbd_step_oracle: non-finite state");
  return y;
}

}  // namespace mcmpc

#endif  // MCMPC_SRBD_DYNAMICS_HPP_
