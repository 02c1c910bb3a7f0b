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

// Small 3-D kinematics kernel: skew operators, roll/pitch/yaw rotations and
// the Euler-rate map, plus the matrix exponential used for exact
// zero-order-hold discretization.

#ifndef MCMPC_SPATIAL_MATH_HPP_
#define MCMPC_SPATIAL_MATH_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "mcmpc/common.hpp"

namespace mcmpc {

// Default margin kept away from pitch = +-pi/2 wherever the Euler-rate map is
// inverted (5 degrees).
inline constexpr double kDefaultPitchMargin = 0.087;

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Roll (about x), pitch (about y), yaw (about z). The rotation is
// R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  static EulerAngles from_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
  Vec3 vector() const { return {roll, pitch, yaw}; }
};

// skew(v) * w == v.cross(w).
inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

inline Mat3 rotation_x(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix();
}
inline Mat3 rotation_y(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix();
}
inline Mat3 rotation_z(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix();
}

inline Mat3 rotation_from_euler(const EulerAngles& e) {
  return rotation_z(e.yaw) * rotation_y(e.pitch) * rotation_x(e.roll);
}

// Inverse of rotation_from_euler, returning pitch in [-pi/2, pi/2].
inline EulerAngles euler_from_rotation(const Mat3& r) {
  EulerAngles e;
  e.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  e.roll = std::atan2(r(2, 1), r(2, 2));
  e.yaw = std::atan2(r(1, 0), r(0, 0));
  return e;
}

inline void check_pitch_margin(double pitch, double margin) {
  if (!(std::abs(pitch) < std::numbers::pi / 2.0 - margin)) {
    throw SingularityError("pitch " + std::to_string(pitch) +
                           " rad is within the Euler-rate singularity margin");
  }
}

// R_b: maps Euler-angle rates to world-frame angular velocity,
// omega = R_b * d(Theta)/dt. Throws SingularityError when |pitch| is not
// below pi/2 - margin.
inline Mat3 euler_rate_matrix(const EulerAngles& e,
                              double margin = kDefaultPitchMargin) {
  check_pitch_margin(e.pitch, margin);
  const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
  const double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
  Mat3 rb;
  rb << cp * cy, -sy, 0.0,
        cp * sy, cy, 0.0,
        -sp, 0.0, 1.0;
  return rb;
}

// d(Theta)/dt = R_b^{-1} * omega (world-frame angular velocity).
inline Vec3 euler_rates(const EulerAngles& e, const Vec3& omega_world,
                        double margin = kDefaultPitchMargin) {
  return euler_rate_matrix(e, margin).partialPivLu().solve(omega_world);
}

inline Mat3 euler_rate_matrix_inverse(const EulerAngles& e,
                                      double margin = kDefaultPitchMargin) {
  return euler_rate_matrix(e, margin).inverse();
}

// exp(A t) by scaling and squaring with a Pade approximant.
inline MatX matrix_exponential(const Eigen::Ref<const MatX>& a, double t) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("matrix_exponential: input is not square");
  }
  const MatX scaled = a * t;
  return scaled.exp();
}

}  // namespace mcmpc

#endif  // MCMPC_SPATIAL_MATH_HPP_
