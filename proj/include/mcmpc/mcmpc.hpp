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

// Umbrella header.

#ifndef MCMPC_MCMPC_HPP_
#define MCMPC_MCMPC_HPP_

#include "mcmpc/cli_runner.hpp"
#include "mcmpc/closed_loop.hpp"
#include "mcmpc/common.hpp"
#include "mcmpc/contact_schedule.hpp"
#include "mcmpc/json_util.hpp"
#include "mcmpc/kinematic_tree.hpp"
#include "mcmpc/mpc.hpp"
#include "mcmpc/plant_sim.hpp"
#include "mcmpc/qp_solver.hpp"
#include "mcmpc/robot_model.hpp"
#include "mcmpc/spatial_math.hpp"
#include "mcmpc/srbd_dynamics.hpp"
#include "mcmpc/swing_hand_pd.hpp"
#include "mcmpc/whole_body_control.hpp"

#endif  // MCMPC_MCMPC_HPP_
