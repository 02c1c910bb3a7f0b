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

// Whole-body control: joint-space dynamics terms, task-space commands with
// prioritized inverse kinematics, and the relaxation QP that maps the MPC
// wrench and limb PD forces to joint torques.

#ifndef MCMPC_WHOLE_BODY_CONTROL_HPP_
#define MCMPC_WHOLE_BODY_CONTROL_HPP_

#include <array>
#include <string>
#include <vector>

#include "mcmpc/common.hpp"
#include "mcmpc/contact_schedule.hpp"
#include "mcmpc/kinematic_tree.hpp"
#include "mcmpc/qp_solver.hpp"
#include "mcmpc/robot_model.hpp"
#include "mcmpc/srbd_dynamics.hpp"

namespace mcmpc {

inline constexpr int kWrenchDim = 10;  // [F1; F2; M1; M2]

struct JointState {
  VecX q;
  VecX dq;
};

// M qdd + c + g = S' tau + tau_f.
struct DynamicsTerms {
  MatX mass;
  VecX coriolis;
  VecX gravity;
  TreeKinematics kin;

  VecX bias() const { return coriolis + gravity; }
};

inline DynamicsTerms compute_dynamics(const KinematicTree& tree, const Eigen::Ref<const VecX>& q,
                                      const Eigen::Ref<const VecX>& dq) {
  if (q.size() != tree.num_dofs() || dq.size() != tree.num_dofs()) {
    throw std::invalid_argument("compute_dynamics: state size mismatch");
  }
  DynamicsTerms d;
  d.mass = mass_matrix(tree, q);
  d.gravity = gravity_forces(tree, q);
  d.coriolis = bias_forces(tree, q, dq) - d.gravity;
  d.kin = forward_kinematics(tree, q, dq);
  return d;
}

// Link indices of the humanoid frames used by the controllers.
struct RobotFrames {
  int trunk = 0;
  std::array<int, 2> foot{};
  std::array<int, 2> hand{};

  static RobotFrames from(const RobotModel& m) {
    RobotFrames f;
    f.trunk = m.tree.root_link;
    for (int n = 0; n < 2; ++n) {
      f.foot[n] = m.tree.find_link(m.body.feet[n].link);
      f.hand[n] = m.tree.find_link(m.body.hands[n].link);
    }
    return f;
  }
};

// Task Jacobians (world frame) and their J-dot q-dot terms.
struct TaskTerms {
  std::array<MatX, 2> foot_jac;  // 6 x n at the sole point, [angular; linear]
  std::array<Vec6, 2> foot_bias;
  std::array<Vec3, 2> foot_pos;
  std::array<Vec3, 2> foot_vel;
  std::array<Mat3, 2> foot_rot;
  std::array<MatX, 2> hand_jac;  // 3 x n
  std::array<Vec3, 2> hand_bias;
  std::array<Vec3, 2> hand_pos;
  std::array<Vec3, 2> hand_vel;
  MatX com_jac;                  // 3 x n
  Vec3 com_bias = Vec3::Zero();
  Vec3 com = Vec3::Zero();
  Vec3 com_vel = Vec3::Zero();
  MatX grasp_jac;                // 3 x n, midpoint of the hands
  Vec3 grasp_pos = Vec3::Zero();
  Vec3 grasp_vel = Vec3::Zero();
};

inline TaskTerms compute_tasks(const RobotModel& model, const RobotFrames& frames,
                               const TreeKinematics& kin, const Eigen::Ref<const VecX>& dq) {
  const KinematicTree& tree = model.tree;
  const int n = tree.num_dofs();
  TaskTerms t;
  for (int s = 0; s < 2; ++s) {
    const Vec3 sole = model.body.feet[s].sole;
    t.foot_jac[s] = point_jacobian(tree, kin, frames.foot[s], sole);
    t.foot_bias[s] = point_bias_acceleration(kin, frames.foot[s], sole);
    t.foot_pos[s] = point_position(kin, frames.foot[s], sole);
    t.foot_vel[s] = point_velocity(kin, frames.foot[s], sole).tail<3>();
    t.foot_rot[s] = kin.rotation[frames.foot[s]];
    const Vec3 pt = model.body.hands[s].point;
    t.hand_jac[s] = point_jacobian(tree, kin, frames.hand[s], pt).bottomRows<3>();
    t.hand_bias[s] = point_bias_acceleration(kin, frames.hand[s], pt).tail<3>();
    t.hand_pos[s] = point_position(kin, frames.hand[s], pt);
    t.hand_vel[s] = point_velocity(kin, frames.hand[s], pt).tail<3>();
  }
  t.grasp_jac = 0.5 * (t.hand_jac[0] + t.hand_jac[1]);
  t.grasp_pos = 0.5 * (t.hand_pos[0] + t.hand_pos[1]);
  t.grasp_vel = 0.5 * (t.hand_vel[0] + t.hand_vel[1]);

  // Mass-weighted sum of link CoM Jacobians.
  t.com_jac = MatX::Zero(3, n);
  double mass = 0.0;
  for (int i = 0; i < tree.num_links(); ++i) {
    const Link& l = tree.links[i];
    if (l.mass <= 0.0) continue;
    const Vec3 c = point_position(kin, i, l.com);
    for (int j = i; j >= 0; j = tree.links[j].parent) {
      const Link& lj = tree.links[j];
      const Vec3 axis = kin.rotation[j] * lj.axis;
      t.com_jac.col(lj.dof) += l.mass * (lj.joint == JointType::kRevolute
                                             ? Vec3(axis.cross(c - kin.position[j]))
                                             : axis);
    }
    t.com += l.mass * c;
    t.com_bias += l.mass * point_bias_acceleration(kin, i, l.com).tail<3>();
    mass += l.mass;
  }
  t.com_jac /= mass;
  t.com /= mass;
  t.com_bias /= mass;
  t.com_vel = t.com_jac * dq;
  return t;
}

// Contact Jacobian transpose mapping [F1; F2; M1; M2] (world) to generalized
// forces, with swing columns zeroed.
inline MatX contact_map(const TaskTerms& t, const ContactFlags& flags) {
  const int n = static_cast<int>(t.com_jac.cols());
  MatX jt = MatX::Zero(n, kWrenchDim);
  for (int s = 0; s < 2; ++s) {
    if (!flags.foot[s]) continue;
    jt.middleCols<3>(srbd::force_index(s)) = t.foot_jac[s].bottomRows<3>().transpose();
    jt.middleCols<2>(srbd::moment_index(s)) = t.foot_jac[s].middleRows<2>(1).transpose();
  }
  return jt;
}

// Generalized external force from contacts, limb PD forces and the carried
// object. F_ext is the force the hands exert on the object, so the robot
// receives -F_ext. Swing forces are gated by the other foot's stance flag.
inline VecX external_generalized_force(const TaskTerms& t, const ContactFlags& flags,
                                       const Eigen::Ref<const VecX>& u,
                                       const std::array<Vec3, 2>& f_swing,
                                       const std::array<Vec3, 2>& f_hand, const Vec3& f_ext) {
  if (u.size() != kWrenchDim) throw std::invalid_argument("tau_f: wrench must have 10 entries");
  VecX tau = contact_map(t, flags) * u;
  for (int m = 0; m < 2; ++m) {
    if (flags.hand[m]) tau += t.hand_jac[m].transpose() * f_hand[m];
  }
  if (flags.foot[1]) tau += t.foot_jac[0].bottomRows<3>().transpose() * f_swing[0];
  if (flags.foot[0]) tau += t.foot_jac[1].bottomRows<3>().transpose() * f_swing[1];
  if (flags.object) tau -= t.grasp_jac.transpose() * f_ext;
  return tau;
}

// PD law over [p_c; Theta].
inline Vec6 desired_acceleration(const Vec6& x_des, const Vec6& xd_des, const Vec6& x,
                                 const Vec6& xd, const Vec6& kp, const Vec6& kd) {
  return kp.cwiseProduct(x_des - x) + kd.cwiseProduct(xd_des - xd);
}

inline Vec6 default_wbc_kp() { return (Vec6() << 200, 200, 500, 1000, 1500, 1000).finished(); }
inline Vec6 default_wbc_kd() { return (Vec6() << 20, 20, 30, 30, 30, 30).finished(); }

// One level of the task hierarchy: J qdd + bias = acc.
struct IkTask {
  MatX jac;
  VecX acc;
  VecX bias;
};

inline constexpr double kIkDamping = 1e-4;

// Pseudo-inverse with damping applied only to small singular values.
inline MatX damped_pinv(const MatX& a, double damping = kIkDamping) {
  if (a.rows() == 0) return MatX::Zero(a.cols(), 0);
  const Eigen::JacobiSVD<MatX> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX& s = svd.singularValues();
  VecX inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    inv[i] = s[i] > 100.0 * damping ? 1.0 / s[i] : s[i] / (s[i] * s[i] + damping * damping);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Prioritized resolution: each level acts in the null space of those above.
inline VecX ik_projection(const std::vector<IkTask>& levels, int n, double damping = kIkDamping) {
  VecX qdd = VecX::Zero(n);
  MatX null = MatX::Identity(n, n);
  for (const IkTask& t : levels) {
    if (t.jac.rows() == 0) continue;
    if (t.jac.cols() != n || t.acc.size() != t.jac.rows() || t.bias.size() != t.jac.rows()) {
      throw std::invalid_argument("ik_projection: task dimension mismatch");
    }
    const MatX jn = t.jac * null;
    const MatX jn_pinv = damped_pinv(jn, damping);
    qdd += jn_pinv * (t.acc - t.bias - t.jac * qdd);
    null -= jn_pinv * jn;
  }
  return qdd;
}

struct WbcConfig {
  double h_base = 1.0;
  double h_joint = 0.1;
  double k_force = 0.01;
  double k_moment = 0.01;
  Vec6 kp = default_wbc_kp();
  Vec6 kd = default_wbc_kd();
  double mu = 0.5;
  double f_min = 0.0;
  double f_max = 500.0;
  bool enforce_torque_limits = true;
  bool enforce_cop = true;

  void validate() const {
    if (h_base < 0.0 || h_joint < 0.0 || k_force < 0.0 || k_moment < 0.0 ||
        (kp.array() < 0.0).any() || (kd.array() < 0.0).any()) {
      throw ConfigError("wbc: weights and gains must be non-negative");
    }
    if (!(mu > 0.0) || f_min < 0.0 || !(f_max > f_min)) {
      throw ConfigError("wbc: bad friction or force bounds");
    }
  }
};

struct WbcInput {
  VecX qdd_cmd;                          // 22
  Eigen::Matrix<double, kWrenchDim, 1> u = Eigen::Matrix<double, kWrenchDim, 1>::Zero();
  ContactFlags flags;
  std::array<Vec3, 2> f_swing{Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> f_hand{Vec3::Zero(), Vec3::Zero()};
  Vec3 f_ext = Vec3::Zero();
};

struct WbcResult {
  QpStatus status = QpStatus::kInfeasible;
  VecX dqdd;
  VecX du;
  VecX qdd;
  VecX tau;             // actuated joints
  double objective = 0.0;
  double base_residual = 0.0;
  bool torque_limited = false;  // limits relaxed to recover feasibility
  std::string diagnostic;
};

// Generalized force produced by the limb PD laws through the actuators.
inline VecX limb_pd_torque(const TaskTerms& t, const WbcInput& in) {
  VecX tau = VecX::Zero(t.com_jac.cols());
  for (int m = 0; m < 2; ++m) {
    if (in.flags.hand[m]) tau += t.hand_jac[m].transpose() * in.f_hand[m];
  }
  if (in.flags.foot[1]) tau += t.foot_jac[0].bottomRows<3>().transpose() * in.f_swing[0];
  if (in.flags.foot[0]) tau += t.foot_jac[1].bottomRows<3>().transpose() * in.f_swing[1];
  return tau;
}

inline WbcResult solve_wbc(const RobotModel& model, const DynamicsTerms& dyn, const TaskTerms& t,
                           const WbcInput& in, const WbcConfig& cfg) {
  const int n = model.num_dofs(), nb = model.base_dofs(), na = model.num_actuated();
  const int nv = n + kWrenchDim;
  if (in.qdd_cmd.size() != n) throw std::invalid_argument("solve_wbc: qdd_cmd size mismatch");
  const MatX jt = contact_map(t, in.flags);
  VecX obj = VecX::Zero(n);
  if (in.flags.object) obj = -t.grasp_jac.transpose() * in.f_ext;
  // Actuators also realize the limb PD forces; they do not enter the base rows.
  VecX pd = limb_pd_torque(t, in);
  pd.head(nb).setZero();
  // Generalized residual r(z) = M(qdd_cmd + dqdd) + h - Jt (u + du) - obj.
  const VecX r0 = dyn.mass * in.qdd_cmd + dyn.bias() - jt * in.u - obj;
  MatX g(n, nv);
  g.leftCols(n) = dyn.mass;
  g.rightCols(kWrenchDim) = -jt;

  QpProblem p(nv);
  for (int i = 0; i < n; ++i) p.P(i, i) = 2.0 * (i < nb ? cfg.h_base : cfg.h_joint);
  for (int s = 0; s < 2; ++s) {
    const int f = n + srbd::force_index(s), m = n + srbd::moment_index(s);
    for (int c = 0; c < 3; ++c) p.P(f + c, f + c) = 2.0 * cfg.k_force;
    for (int c = 0; c < 2; ++c) p.P(m + c, m + c) = 2.0 * cfg.k_moment;
  }
  int swing_vars = 0;
  for (int s = 0; s < 2; ++s) swing_vars += in.flags.foot[s] ? 0 : 5;
  p.A_eq = MatX::Zero(nb + swing_vars, nv);
  p.b_eq = VecX::Zero(nb + swing_vars);
  p.A_eq.topRows(nb) = g.topRows(nb);
  p.b_eq.head(nb) = -r0.head(nb);
  p.eq_labels.assign(nb, "floating_base");
  int row = nb;
  for (int s = 0; s < 2; ++s) {
    if (in.flags.foot[s]) continue;
    for (int c : {0, 1, 2}) {
      const int k = srbd::force_index(s) + c;
      p.A_eq(row, n + k) = 1.0;
      p.b_eq[row++] = -in.u[k];
      p.eq_labels.emplace_back("swing_pin");
    }
    for (int c : {0, 1}) {
      const int k = srbd::moment_index(s) + c;
      p.A_eq(row, n + k) = 1.0;
      p.b_eq[row++] = -in.u[k];
      p.eq_labels.emplace_back("swing_pin");
    }
  }

  // Wrench rows on u + du for each stance foot.
  struct Row {
    VecX a;
    double lb, ub;
  };
  std::vector<Row> rows;
  std::vector<std::string> labels;
  auto add = [&](const VecX& a, double lb, double ub, const char* label) {
    rows.push_back({a, lb, ub});
    labels.emplace_back(label);
  };
  for (int s = 0; s < 2; ++s) {
    if (!in.flags.foot[s]) continue;
    const int f = n + srbd::force_index(s), m = n + srbd::moment_index(s);
    const int uf = srbd::force_index(s), um = srbd::moment_index(s);
    const double fz = in.u[uf + 2];
    VecX a = VecX::Zero(nv);
    a[f + 2] = 1.0;
    add(a, cfg.f_min - fz, cfg.f_max - fz, "force_bounds");
    for (int axis = 0; axis < 2; ++axis) {
      VecX b = VecX::Zero(nv);
      b[f + axis] = 1.0;
      b[f + 2] = -cfg.mu;
      add(b, -kInf, -(in.u[uf + axis] - cfg.mu * fz), "friction_pyramid");
      b[f + 2] = cfg.mu;
      add(b, -(in.u[uf + axis] + cfg.mu * fz), kInf, "friction_pyramid");
    }
    if (cfg.enforce_cop) {
      const FootGeometry& geo = model.body.feet[s];
      // M_y = -x_cop Fz with x_cop in [-heel, toe]; |M_z| <= mu heel Fz.
      VecX c = VecX::Zero(nv);
      c[m] = 1.0;
      c[f + 2] = geo.toe;
      add(c, -(in.u[um] + geo.toe * fz), kInf, "center_of_pressure");
      c[f + 2] = -geo.heel;
      add(c, -kInf, -(in.u[um] - geo.heel * fz), "center_of_pressure");
      VecX d = VecX::Zero(nv);
      d[m + 1] = 1.0;
      d[f + 2] = cfg.mu * geo.heel;
      add(d, -(in.u[um + 1] + cfg.mu * geo.heel * fz), kInf, "center_of_pressure");
      d[f + 2] = -cfg.mu * geo.heel;
      add(d, -kInf, -(in.u[um + 1] - cfg.mu * geo.heel * fz), "center_of_pressure");
    }
  }
  const int m_wrench = static_cast<int>(rows.size());
  const int m_tau = cfg.enforce_torque_limits ? na : 0;
  auto assemble = [&](int torque_rows) {
    p.A_in = MatX::Zero(m_wrench + torque_rows, nv);
    p.lb = VecX::Zero(m_wrench + torque_rows);
    p.ub = VecX::Zero(m_wrench + torque_rows);
    p.in_labels = labels;
    for (int i = 0; i < m_wrench; ++i) {
      p.A_in.row(i) = rows[i].a.transpose();
      p.lb[i] = rows[i].lb;
      p.ub[i] = rows[i].ub;
    }
    for (int j = 0; j < torque_rows; ++j) {
      const double tmax = model.limits.torque_max[j];
      const double offset = r0[nb + j] + pd[nb + j];
      p.A_in.row(m_wrench + j) = g.row(nb + j);
      p.lb[m_wrench + j] = -tmax - offset;
      p.ub[m_wrench + j] = tmax - offset;
      p.in_labels.emplace_back("torque_limits");
    }
  };
  assemble(m_tau);
  QpSolution qs = solve_qp(p);
  WbcResult out;
  if (!qs.optimal() && m_tau > 0) {
    out.torque_limited = true;
    out.diagnostic = qs.diagnostic;
    assemble(0);
    qs = solve_qp(p);
  }
  out.status = qs.status;
  if (!qs.optimal()) {
    out.diagnostic += (out.diagnostic.empty() ? "" : "; ") + qs.diagnostic;
    return out;
  }
  out.dqdd = qs.z.head(n);
  out.du = qs.z.tail(kWrenchDim);
  out.qdd = in.qdd_cmd + out.dqdd;
  out.objective = 0.5 * qs.z.dot(p.P * qs.z);
  const VecX r = r0 + g * qs.z + pd;
  out.base_residual = r.head(nb).lpNorm<Eigen::Infinity>();
  out.tau = r.segment(nb, na);
  return out;
}

}  // namespace mcmpc

#endif  // MCMPC_WHOLE_BODY_CONTROL_HPP_
