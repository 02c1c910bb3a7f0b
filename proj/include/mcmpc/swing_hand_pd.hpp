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

// Swing-foot placement and Cartesian PD laws for swing feet and hands.

#ifndef MCMPC_SWING_HAND_PD_HPP_
#define MCMPC_SWING_HAND_PD_HPP_

#include <numbers>

#include "mcmpc/common.hpp"
#include "mcmpc/spatial_math.hpp"

namespace mcmpc {

struct PdGains {
  Vec3 kp = Vec3::Constant(500.0);
  Vec3 kd = Vec3::Constant(30.0);

  void validate() const {
    if (!kp.allFinite() || !kd.allFinite() || (kp.array() < 0.0).any() ||
        (kd.array() < 0.0).any()) {
      throw ConfigError("pd gains must be finite and non-negative");
    }
  }
};

inline constexpr double kDefaultPlacementGain = 0.03;  // s
inline constexpr double kDefaultSwingApex = 0.08;      // m

// Raibert-style foothold: x/y from the velocity heuristic, z on the ground.
// hip_offset is the lateral offset of this leg in the heading frame.
inline Vec3 foot_placement(const Vec3& p_c, const Vec3& v_c, const Vec3& v_des, double period,
                           double k_gain = kDefaultPlacementGain,
                           const Vec3& hip_offset = Vec3::Zero(), double yaw = 0.0,
                           double ground = 0.0) {
  if (!(period > 0.0)) throw std::invalid_argument("foot_placement: gait period must be positive");
  Vec3 p = p_c + v_c * (0.5 * period) + k_gain * (v_c - v_des) + rotation_z(yaw) * hip_offset;
  p.z() = ground;
  return p;
}

inline Vec3 cartesian_pd(const Vec3& p_des, const Vec3& v_des, const Vec3& p, const Vec3& v,
                         const PdGains& gains) {
  return gains.kp.cwiseProduct(p_des - p) + gains.kd.cwiseProduct(v_des - v);
}

inline Vec3 swing_force(const Vec3& p_des, const Vec3& v_des, const Vec3& p, const Vec3& v,
                        const PdGains& gains) {
  return cartesian_pd(p_des, v_des, p, v, gains);
}

inline Vec3 hand_force(const Vec3& p_des, const Vec3& v_des, const Vec3& p, const Vec3& v,
                       const PdGains& gains) {
  return cartesian_pd(p_des, v_des, p, v, gains);
}

struct SwingPlan {
  Vec3 start = Vec3::Zero();
  Vec3 target = Vec3::Zero();
  double apex = kDefaultSwingApex;  // bump height over the endpoint blend
  double duration = 0.2;            // s
};

struct SwingReference {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
};

// Quintic blend in x/y, sine-squared bump in z.
inline SwingReference swing_trajectory(const SwingPlan& plan, double phase) {
  if (!(phase >= 0.0 && phase <= 1.0)) {
    throw std::invalid_argument("swing_trajectory: phase outside [0, 1]");
  }
  if (!(plan.duration > 0.0)) throw std::invalid_argument("swing_trajectory: bad duration");
  const double s = phase, t = plan.duration;
  const double b = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  const double db = 30.0 * s * s * (1.0 - s) * (1.0 - s);
  const double ddb = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
  const Vec3 d = plan.target - plan.start;
  SwingReference r;
  r.p = plan.start + b * d;
  r.v = db / t * d;
  r.a = ddb / (t * t) * d;
  // z follows the same blend, bump on top.
  constexpr double pi = std::numbers::pi;
  const double sn = std::sin(pi * s);
  r.p.z() += plan.apex * sn * sn;
  r.v.z() += plan.apex * pi * std::sin(2.0 * pi * s) / t;
  r.a.z() += plan.apex * 2.0 * pi * pi * std::cos(2.0 * pi * s) / (t * t);
  return r;
}

}  // namespace mcmpc

#endif  // MCMPC_SWING_HAND_PD_HPP_
