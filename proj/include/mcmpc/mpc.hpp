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

// Condensed linear MPC over the single-rigid-body model with a contact
// schedule. Decision variables are the k stacked 13-dimensional inputs.

#ifndef MCMPC_MPC_HPP_
#define MCMPC_MPC_HPP_

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "mcmpc/common.hpp"
#include "mcmpc/contact_schedule.hpp"
#include "mcmpc/qp_solver.hpp"
#include "mcmpc/srbd_dynamics.hpp"

namespace mcmpc {

namespace mpc_labels {
inline constexpr const char* kFriction = "friction_pyramid";
inline constexpr const char* kForceBounds = "force_bounds";
inline constexpr const char* kSwingPin = "swing_pin";
inline constexpr const char* kExternalForce = "external_force";
}  // namespace mpc_labels

inline StateVec default_state_weights() {
  StateVec q;
  q << 1500, 2000, 1000, 1000, 1000, 1000, 1, 3, 10, 1, 1, 1, 1, 1, 1;
  return q;
}

inline InputVec default_input_weights() {
  InputVec r;
  r << 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 5e-4, 5e-4, 5e-4, 5e-4, 0.0, 0.0, 0.0;
  return r;
}

struct MpcConfig {
  double dt = 0.03;
  int horizon = 20;
  StateVec q_weights = default_state_weights();
  InputVec r_weights = default_input_weights();
  double mu = 0.5;
  double f_min = 10.0;
  double f_max = 500.0;
  Discretization discretization = Discretization::kZeroOrderHold;
  double pitch_margin = kDefaultPitchMargin;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("mpc: dt must be positive");
    if (horizon < 1) throw ConfigError("mpc: horizon must be at least 1");
    if (!q_weights.allFinite() || (q_weights.array() < 0.0).any()) {
      throw ConfigError("mpc: state weights must be finite and non-negative");
    }
    if (!r_weights.allFinite() || (r_weights.array() < 0.0).any()) {
      throw ConfigError("mpc: input weights must be finite and non-negative");
    }
    if (!(mu > 0.0)) throw ConfigError("mpc: friction coefficient must be positive");
    if (!(f_min > 0.0 && f_min < f_max)) {
      throw ConfigError("mpc: force bounds need 0 < f_min < f_max");
    }
  }
};

// Desired states x_1..x_k.
struct ReferenceTrajectory {
  std::vector<StateVec> x;

  int size() const { return static_cast<int>(x.size()); }

  void validate(int k) const {
    if (size() != k) throw std::invalid_argument("reference: horizon length mismatch");
    for (const StateVec& s : x) {
      if (!s.allFinite()) throw std::invalid_argument("reference: non-finite state");
      if ((s.segment<3>(srbd::kGravityState) - srbd::gravity_vector()).norm() > 1e-12) {
        throw std::invalid_argument("reference: gravity block must be (0, 0, -g)");
      }
    }
  }
};

// Lumped body used by the prediction model.
struct SrbdBody {
  double mass = 17.0;
  Mat3 inertia_body = Mat3::Identity();
};

// Schedule and geometry for one horizon step.
struct HorizonStep {
  ContactFlags flags;
  std::array<Vec3, 2> feet{Vec3::Zero(), Vec3::Zero()};  // world
  Vec3 object_offset_body = Vec3::Zero();  // CoM to object CoM, trunk frame
  double object_mass = 0.0;
};

struct CondensedModel {
  MatX a_qp;  // 15k x 15
  MatX b_qp;  // 15k x 13k
};

struct MpcProblem {
  QpProblem qp;
  CondensedModel model;
  std::vector<DiscreteSS> steps;
};

struct MpcSolution {
  QpStatus status = QpStatus::kInfeasible;
  std::vector<InputVec> inputs;
  std::vector<StateVec> predicted;  // x_1..x_k
  double solve_time_ms = 0.0;
  int iterations = 0;
  std::string violated_class;
  std::string diagnostic;

  bool optimal() const { return status == QpStatus::kOptimal; }
  const InputVec& first() const {
    if (inputs.empty()) throw std::logic_error("mpc: no solution available");
    return inputs.front();
  }
};

// Linearization about the current state for step 0 and the reference after.
inline std::vector<DiscreteSS> horizon_models(const StateVec& x0, const ReferenceTrajectory& ref,
                                              const std::vector<HorizonStep>& steps,
                                              const SrbdBody& body, const MpcConfig& cfg) {
  const int k = static_cast<int>(steps.size());
  std::vector<DiscreteSS> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    const StateVec& lin = i == 0 ? x0 : ref.x[i - 1];
    const EulerAngles theta = EulerAngles::from_vector(lin.segment<3>(srbd::kTheta));
    const Vec3 p = lin.segment<3>(srbd::kPos);
    const HorizonStep& s = steps[i];
    ContinuousSS ss;
    ss.a = build_A(theta, cfg.pitch_margin);
    ss.b = build_B(s.feet[0] - p, s.feet[1] - p, rotation_from_euler(theta) * s.object_offset_body,
                   world_inertia(body.inertia_body, theta), body.mass, s.flags);
    out.push_back(discretize(ss, cfg.dt, cfg.discretization));
  }
  return out;
}

// Stacked prediction X = a_qp x0 + b_qp U.
inline CondensedModel condense(const std::vector<DiscreteSS>& steps) {
  using namespace srbd;
  const int k = static_cast<int>(steps.size());
  CondensedModel c;
  c.a_qp = MatX::Zero(kStateDim * k, kStateDim);
  c.b_qp = MatX::Zero(kStateDim * k, kInputDim * k);
  MatX phi = MatX::Identity(kStateDim, kStateDim);
  for (int i = 0; i < k; ++i) {
    phi = steps[i].a * phi;
    c.a_qp.middleRows(kStateDim * i, kStateDim) = phi;
    c.b_qp.block(kStateDim * i, kInputDim * i, kStateDim, kInputDim) = steps[i].b;
    for (int j = 0; j < i; ++j) {
      c.b_qp.block(kStateDim * i, kInputDim * j, kStateDim, kInputDim) =
          steps[i].a * c.b_qp.block(kStateDim * (i - 1), kInputDim * j, kStateDim, kInputDim);
    }
  }
  return c;
}

namespace detail {

// Preallocated row writer for the constraint blocks.
struct RowWriter {
  QpProblem* p;
  int eq = 0;
  int in = 0;

  void add_in(int col_a, double a, int col_b, double b, double lo, double hi, const char* label) {
    p->A_in(in, col_a) = a;
    if (col_b >= 0) p->A_in(in, col_b) = b;
    p->lb[in] = lo;
    p->ub[in] = hi;
    p->in_labels[in++] = label;
  }
  void add_eq(int col, double value, const char* label) {
    p->A_eq(eq, col) = 1.0;
    p->b_eq[eq] = value;
    p->eq_labels[eq++] = label;
  }
};

}  // namespace detail

inline MpcProblem build_qp(const StateVec& x0, const ReferenceTrajectory& ref,
                           const std::vector<HorizonStep>& steps, const SrbdBody& body,
                           const MpcConfig& cfg) {
  using namespace srbd;
  const int k = static_cast<int>(steps.size());
  if (k != cfg.horizon) throw std::invalid_argument("build_qp: schedule length != horizon");
  ref.validate(k);
  if (!x0.allFinite()) throw std::invalid_argument("build_qp: non-finite initial state");

  MpcProblem out;
  out.steps = horizon_models(x0, ref, steps, body, cfg);
  out.model = condense(out.steps);
  const MatX& bq = out.model.b_qp;

  const int nv = kInputDim * k;
  VecX q_bar(kStateDim * k), r_bar(nv), x_ref(kStateDim * k);
  for (int i = 0; i < k; ++i) {
    q_bar.segment<kStateDim>(kStateDim * i) = cfg.q_weights;
    r_bar.segment<kInputDim>(kInputDim * i) = cfg.r_weights;
    x_ref.segment<kStateDim>(kStateDim * i) = ref.x[i];
  }
  QpProblem& qp = out.qp;
  qp = QpProblem(nv);
  const MatX qb = q_bar.asDiagonal() * bq;
  qp.P.noalias() = 2.0 * bq.transpose() * qb;
  qp.P.diagonal() += 2.0 * r_bar;
  qp.P = 0.5 * (qp.P + qp.P.transpose()).eval();
  qp.q.noalias() = 2.0 * qb.transpose() * (out.model.a_qp * x0 - x_ref);

  int m_in = 0, m_eq = 0;
  for (const HorizonStep& s : steps) {
    const int stance = s.flags.num_stance();
    m_in += 5 * stance;
    m_eq += 5 * (2 - stance) + 3;
  }
  qp.A_eq = MatX::Zero(m_eq, nv);
  qp.b_eq = VecX::Zero(m_eq);
  qp.eq_labels.resize(m_eq);
  qp.A_in = MatX::Zero(m_in, nv);
  qp.lb = VecX::Zero(m_in);
  qp.ub = VecX::Zero(m_in);
  qp.in_labels.resize(m_in);
  detail::RowWriter w{&qp};
  for (int i = 0; i < k; ++i) {
    const HorizonStep& s = steps[i];
    const int base = kInputDim * i;
    for (int n = 0; n < 2; ++n) {
      const int f = base + force_index(n), m = base + moment_index(n);
      if (!s.flags.foot[n]) {
        for (int c = 0; c < 3; ++c) w.add_eq(f + c, 0.0, mpc_labels::kSwingPin);
        for (int c = 0; c < 2; ++c) w.add_eq(m + c, 0.0, mpc_labels::kSwingPin);
        continue;
      }
      for (int axis = 0; axis < 2; ++axis) {
        w.add_in(f + axis, 1.0, f + 2, -cfg.mu, -kInf, 0.0, mpc_labels::kFriction);
        w.add_in(f + axis, 1.0, f + 2, cfg.mu, 0.0, kInf, mpc_labels::kFriction);
      }
      w.add_in(f + 2, 1.0, -1, 0.0, cfg.f_min, cfg.f_max, mpc_labels::kForceBounds);
    }
    const Vec3 f_ext = s.flags.object ? Vec3(0.0, 0.0, s.object_mass * kGravity) : Vec3::Zero();
    for (int c = 0; c < 3; ++c) {
      w.add_eq(base + kExternal + c, f_ext[c], mpc_labels::kExternalForce);
    }
  }
  return out;
}

// Largest violation of the friction and force-bound rows over the horizon.
inline double constraint_violation(const std::vector<InputVec>& inputs,
                                   const std::vector<HorizonStep>& steps, const MpcConfig& cfg) {
  using namespace srbd;
  double worst = 0.0;
  for (size_t i = 0; i < inputs.size() && i < steps.size(); ++i) {
    for (int n = 0; n < 2; ++n) {
      const Vec3 f = inputs[i].segment<3>(force_index(n));
      if (!steps[i].flags.foot[n]) {
        worst = std::max({worst, f.cwiseAbs().maxCoeff(),
                          inputs[i].segment<2>(moment_index(n)).cwiseAbs().maxCoeff()});
        continue;
      }
      for (int axis = 0; axis < 2; ++axis) {
        worst = std::max(worst, std::abs(f[axis]) - cfg.mu * f[2]);
      }
      worst = std::max({worst, cfg.f_min - f[2], f[2] - cfg.f_max});
    }
  }
  return worst;
}

class MpcController {
 public:
  explicit MpcController(MpcConfig cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const MpcConfig& config() const { return cfg_; }
  void reset() { solver_.reset_warm_start(); }

  MpcSolution solve(const StateVec& x0, const ReferenceTrajectory& ref,
                    const std::vector<HorizonStep>& steps, const SrbdBody& body) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const MpcProblem prob = build_qp(x0, ref, steps, body, cfg_);
    const QpSolution qs = solver_.solve(prob.qp);
    MpcSolution out = extract(prob, qs, x0);
    out.solve_time_ms =
        std::chrono::duration<double, std::milli>(clock::now() - start).count();
    return out;
  }

  static MpcSolution extract(const MpcProblem& prob, const QpSolution& qs, const StateVec& x0) {
    using namespace srbd;
    MpcSolution out;
    out.status = qs.status;
    out.iterations = qs.iterations;
    out.diagnostic = qs.diagnostic;
    if (qs.violated_row >= 0) {
      out.violated_class = qs.violated_equality ? prob.qp.eq_label(qs.violated_row)
                                                : prob.qp.in_label(qs.violated_row);
    }
    if (!qs.optimal()) return out;
    const int k = static_cast<int>(prob.steps.size());
    const VecX x = prob.model.a_qp * x0 + prob.model.b_qp * qs.z;
    for (int i = 0; i < k; ++i) {
      out.inputs.push_back(qs.z.segment<kInputDim>(kInputDim * i));
      out.predicted.push_back(x.segment<kStateDim>(kStateDim * i));
    }
    return out;
  }

 private:
  MpcConfig cfg_;
  QpSolver solver_;
};

// Commanded motion: planar velocity in the heading frame, yaw rate, height.
struct MotionCommand {
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
  double height = 0.53;
  double roll = 0.0;
  double pitch = 0.0;
  std::optional<Vec3> anchor;   // start position; current CoM when unset
  std::optional<double> yaw;    // start heading; current yaw when unset
};

inline ReferenceTrajectory make_reference(const MotionCommand& cmd, const StateVec& x0,
                                          const MpcConfig& cfg) {
  using namespace srbd;
  ReferenceTrajectory ref;
  Vec3 p = cmd.anchor ? *cmd.anchor : Vec3(x0.segment<3>(kPos));
  double psi = cmd.yaw ? *cmd.yaw : x0[kTheta + 2];
  for (int i = 1; i <= cfg.horizon; ++i) {
    psi += cmd.yaw_rate * cfg.dt;
    const Vec3 v = rotation_z(psi) * Vec3(cmd.vx, cmd.vy, 0.0);
    p += v * cfg.dt;
    p.z() = cmd.height;
    StateVec x;
    x << cmd.roll, cmd.pitch, psi, p, 0.0, 0.0, cmd.yaw_rate, v, gravity_vector();
    ref.x.push_back(x);
  }
  return ref;
}

}  // namespace mcmpc

#endif  // MCMPC_MPC_HPP_
