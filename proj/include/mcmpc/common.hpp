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

#ifndef MCMPC_COMMON_HPP_
#define MCMPC_COMMON_HPP_

#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mcmpc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kGravity = 9.81;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Thrown when the Euler-rate map is evaluated too close to pitch = +-90 deg.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or physically inconsistent robot / object description.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario, timeline or configuration document rejected.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure inside a solver or the simulator.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Eigen::Ref<const MatX>& m) {
  return m.allFinite();
}

}  // namespace mcmpc

#endif  // MCMPC_COMMON_HPP_
