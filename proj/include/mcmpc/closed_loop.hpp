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

// Closed loop: MPC at its own cadence, WBC at 1 kHz, plant at 2 kHz, all on
// one deterministic clock.

#ifndef MCMPC_CLOSED_LOOP_HPP_
#define MCMPC_CLOSED_LOOP_HPP_

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "mcmpc/contact_schedule.hpp"
#include "mcmpc/mpc.hpp"
#include "mcmpc/plant_sim.hpp"
#include "mcmpc/swing_hand_pd.hpp"
#include "mcmpc/whole_body_control.hpp"

namespace mcmpc {

// Model 1 ignores the carried object; Model 2 adds the external force term.
enum class DynamicsModel { kModel1 = 1, kModel2 = 2 };

// One commanded segment of a run.
struct Segment {
  std::string label;
  double start = 0.0;
  bool walk = false;
  bool object = false;                      // sigma_e
  std::optional<std::array<Vec3, 2>> hands;  // targets in the heading frame, base-relative
  double hand_blend = 0.3;                  // s, minimum-jerk move to the new targets
  MotionCommand command;
  std::optional<double> height;             // CoM height; the initial height when unset
};

enum class EventKind { kAttach, kDetach };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::kAttach;
  std::optional<Vec3> target;  // expected object position at a release
};

struct ControllerConfig {
  MpcConfig mpc;
  WbcConfig wbc;
  DynamicsModel model = DynamicsModel::kModel2;
  double wbc_dt = 1e-3;
  double gait_period = 0.4;
  double gait_overlap = 0.0;
  PdGains swing_gains;
  PdGains hand_gains;
  double swing_apex = kDefaultSwingApex;
  double placement_gain = kDefaultPlacementGain;
  double posture_kp = 100.0;
  double posture_kd = 20.0;
  double stance_kd = 20.0;
  double ik_damping = 0.5;
  double fall_angle = 1.0;          // rad
  double fall_height_ratio = 0.5;   // of the nominal CoM height

  void validate() const {
    mpc.validate();
    wbc.validate();
    swing_gains.validate();
    hand_gains.validate();
    if (!(wbc_dt > 0.0) || wbc_dt > 1e-3 + 1e-15) throw ConfigError("wbc period must be <= 1 ms");
    const double ratio = mpc.dt / wbc_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
      throw ConfigError("mpc period must be a multiple of the wbc period");
    }
    if (!(gait_period > 0.0)) throw ConfigError("gait period must be positive");
    if (!(ik_damping > 0.0)) throw ConfigError("ik damping must be positive");
    if (!(fall_angle > 0.0) || !(fall_height_ratio > 0.0)) throw ConfigError("bad fall thresholds");
  }
};

// Expands walk segments into alternating stance phases.
inline Timeline build_timeline(const std::vector<Segment>& segments, double duration,
                               const ControllerConfig& cfg) {
  if (segments.empty()) throw ConfigError("scenario has no segments");
  Timeline tl;
  tl.gait_period = cfg.gait_period;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    const double end =
        i + 1 < segments.size() ? segments[i + 1].start : std::max(duration, s.start);
    ContactFlags base(1, 1, s.object ? 1 : 0, s.hands ? 1 : 0, s.hands ? 1 : 0);
    if (s.walk && end - s.start > kTimeEpsilon) {
      for (Phase p : make_walk_gait(cfg.gait_period, s.start, end - s.start, base,
                                    cfg.gait_overlap)) {
        p.label = s.label + ":" + p.label;
        tl.phases.push_back(p);
      }
    } else {
      tl.phases.push_back({s.start, base, s.label});
    }
  }
  tl.validate();
  return tl;
}

// Per-tick record of the loop.
struct TickLog {
  double time = 0.0;
  StateVec x = StateVec::Zero();
  InputVec u = InputVec::Zero();
  VecX tau;
  ContactFlags flags;
  QpStatus mpc_status = QpStatus::kOptimal;
  QpStatus wbc_status = QpStatus::kOptimal;
  bool mpc_solved = false;  // a new MPC solve happened this tick
  double du_norm = 0.0;
  bool torque_limited = false;
  Vec3 com_ref = Vec3::Zero();
  Vec3 object_p = Vec3::Zero();
  bool attached = false;
};

// Per-MPC-solve audit.
struct MpcAudit {
  double time = 0.0;
  bool optimal = false;
  double solve_ms = 0.0;
  double violation = 0.0;      // friction and force bounds over the horizon
  double f_ext_error = 0.0;    // worst |F_ext - m_o g| over object steps, -1 if none
  bool transition = false;     // contact mode changes inside the horizon
};

struct ReleaseRecord {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  std::optional<Vec3> target;
};

// Damped least-squares placement of the hands at world targets.
inline VecX reach_pose(const RobotModel& model, VecX q, const std::array<Vec3, 2>& targets) {
  const RobotFrames frames = RobotFrames::from(model);
  for (int it = 0; it < 200; ++it) {
    const TreeKinematics k = forward_kinematics(model.tree, q);
    double err = 0.0;
    for (int h = 0; h < 2; ++h) {
      const Vec3 p = point_position(k, frames.hand[h], model.body.hands[h].point);
      const Vec3 e = targets[h] - p;
      err = std::max(err, e.norm());
      MatX jac = point_jacobian(model.tree, k, frames.hand[h], model.body.hands[h].point)
                     .bottomRows<3>();
      // Only this arm's joints move.
      for (int j = 0; j < model.num_dofs(); ++j) {
        const int link = model.tree.link_of_dof(j);
        if (!model.tree.is_ancestor(link, frames.hand[h]) || model.tree.links[link].virtual_base ||
            link == model.tree.root_link) {
          jac.col(j).setZero();
        }
      }
      const MatX jjt = jac * jac.transpose() + 1e-6 * MatX::Identity(3, 3);
      q += jac.transpose() * jjt.ldlt().solve(e);
    }
    if (err < 1e-10) return q;
  }
  throw ModelError("reach_pose: hand targets out of reach");
}

class ClosedLoop {
 public:
  ClosedLoop(const RobotModel& model, const ObjectParams& object, const ControllerConfig& cfg,
             std::vector<Segment> segments, std::vector<Event> events, double duration,
             const PlantConfig& plant_cfg = {})
      : model_(model),
        object_(object),
        cfg_(cfg),
        segments_(std::move(segments)),
        events_(std::move(events)),
        duration_(duration),
        plant_(model, object, plant_cfg),
        mpc_(cfg.mpc),
        frames_(RobotFrames::from(model)) {
    cfg_.validate();
    if (!(duration >= 0.0)) throw ConfigError("duration must be non-negative");
    timeline_ = build_timeline(segments_, duration_, cfg_);
    std::sort(events_.begin(), events_.end(),
              [](const Event& a, const Event& b) { return a.time < b.time; });
    mpc_every_ = static_cast<int>(std::lround(cfg_.mpc.dt / cfg_.wbc_dt));
    substeps_ = std::max(1, static_cast<int>(std::lround(cfg_.wbc_dt / plant_cfg.dt)));
  }

  const Timeline& timeline() const { return timeline_; }
  const Plant& plant() const { return plant_; }
  const PlantState& state() const { return state_; }

  // Initial crouch with the arms at the first segment's hand targets.
  void initialize(const ObjectState& object_init, bool object_on_fixture) {
    VecX q = standing_pose(model_);
    if (segments_.front().hands) {
      const TreeKinematics k = forward_kinematics(model_.tree, q);
      std::array<Vec3, 2> world;
      for (int h = 0; h < 2; ++h) {
        world[h] = k.position[frames_.trunk] + (*segments_.front().hands)[h];
      }
      q = reach_pose(model_, q, world);
    }
    q_nominal_ = q;
    state_ = plant_.initial_state(q, object_init);
    object_fixed_ = object_on_fixture;
    const Measurement m = plant_.measure(state_);
    com_ref_ = m.body.p;
    yaw_ref_ = m.body.theta.yaw;
    height_ = m.body.p.z();
    for (int h = 0; h < 2; ++h) {
      hand_from_[h] = hand_to_[h] = segments_.front().hands ? (*segments_.front().hands)[h]
                                                           : Vec3::Zero();
    }
    hand_blend_start_ = 0.0;
    hand_blend_len_ = 0.0;
    tick_ = 0;
    fall_.reset();
    last_tau_ = VecX::Zero(model_.num_actuated());
    swing_.fill(std::nullopt);
  }

  bool done() const { return fall_ || tick_ * cfg_.wbc_dt >= duration_ - 1e-12; }

  // Set once the trunk tips over or the CoM drops; the run stops there.
  const std::optional<std::string>& fall() const { return fall_; }

  // One WBC period. Returns the tick record.
  TickLog tick() {
    const double t = tick_ * cfg_.wbc_dt;
    apply_events(t);
    const std::size_t seg_index = segment_index(t);
    const Segment& seg = segments_[seg_index];
    if (seg_index != current_segment_) enter_segment(seg_index, t);
    ContactFlags flags = flags_at(timeline_, t);

    const Measurement meas = plant_.measure(state_);
    const StateVec x0 = meas.body.augmented();

    // Reference CoM: integrate the command; the height is tracked absolutely.
    MotionCommand cmd = seg.command;
    cmd.height = seg.height.value_or(height_);
    cmd.anchor = com_ref_;
    cmd.yaw = yaw_ref_;

    TickLog log;
    log.time = t;
    const ContactFlags solve_flags = controller_flags(flags);
    if (tick_ % mpc_every_ == 0 || solve_flags.foot != mpc_flags_.foot ||
        solve_flags.object != mpc_flags_.object) {
      mpc_flags_ = solve_flags;
      solve_mpc(t, x0, cmd, meas);
      log.mpc_solved = true;
    }
    log.mpc_status = mpc_status_;

    // Current MPC input (zero-order hold of the first step).
    InputVec u_mpc = u_hold_;
    const ContactFlags ctrl = controller_flags(flags);
    for (int s = 0; s < 2; ++s) {
      if (!ctrl.foot[s]) {
        u_mpc.segment<3>(srbd::force_index(s)).setZero();
        u_mpc.segment<2>(srbd::moment_index(s)).setZero();
      }
    }
    if (!ctrl.object) u_mpc.segment<3>(srbd::kExternal).setZero();

    const DynamicsTerms dyn = compute_dynamics(model_.tree, state_.joints.q, state_.joints.dq);
    const TaskTerms tasks = compute_tasks(model_, frames_, dyn.kin, state_.joints.dq);

    WbcInput in;
    in.flags = ctrl;
    in.u = u_mpc.head<kWrenchDim>();
    in.f_ext = u_mpc.segment<3>(srbd::kExternal);
    std::vector<IkTask> levels;
    swing_levels(t, flags, meas, tasks, &in, &levels);
    levels.push_back(body_task(cmd, ctrl, combined_body(flags), meas, tasks));
    hand_levels(t, ctrl, meas, tasks, &in, &levels);
    levels.push_back(posture_task());
    in.qdd_cmd = ik_projection(levels, model_.num_dofs(), cfg_.ik_damping);

    const auto w0 = std::chrono::steady_clock::now();
    const WbcResult r = solve_wbc(model_, dyn, tasks, in, cfg_.wbc);
    wbc_ms_.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - w0).count());
    VecX tau = last_tau_;
    if (r.status == QpStatus::kOptimal) tau = r.tau;
    last_tau_ = tau;

    for (int i = 0; i < substeps_; ++i) {
      state_ = plant_.step(state_, tau, plant_.config().dt);
      if (object_fixed_ && !state_.attached) state_.object = fixed_object_;
    }
    advance_reference(cmd);
    check_fall();

    log.x = x0;
    log.u = u_mpc;
    log.tau = tau;
    log.flags = flags;
    log.wbc_status = r.status;
    if (r.status == QpStatus::kOptimal) log.du_norm = r.du.norm();
    log.torque_limited = r.torque_limited;
    log.com_ref = cmd.anchor.value();
    log.com_ref.z() = cmd.height;
    log.object_p = state_.object.p;
    log.attached = state_.attached;
    ++tick_;
    return log;
  }

  const std::vector<MpcAudit>& mpc_audit() const { return audit_; }
  const std::vector<double>& wbc_times_ms() const { return wbc_ms_; }
  const std::vector<ReleaseRecord>& releases() const { return releases_; }
  int attach_count() const { return attaches_; }

 private:
  std::size_t segment_index(double t) const {
    std::size_t i = 0;
    while (i + 1 < segments_.size() && segments_[i + 1].start <= t + kTimeEpsilon) ++i;
    return i;
  }

  void enter_segment(std::size_t index, double t) {
    const Segment& seg = segments_[index];
    if (seg.hands) {
      for (int h = 0; h < 2; ++h) hand_from_[h] = hand_target_h(h, t);
      hand_to_ = *seg.hands;
      hand_blend_start_ = t;
      hand_blend_len_ = seg.hand_blend;
    }
    current_segment_ = index;
  }

  Vec3 hand_target_h(int h, double t) const {
    if (!(hand_blend_len_ > 0.0)) return hand_to_[h];
    const double s = std::clamp((t - hand_blend_start_) / hand_blend_len_, 0.0, 1.0);
    const double b = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    return hand_from_[h] + b * (hand_to_[h] - hand_from_[h]);
  }

  void apply_events(double t) {
    while (next_event_ < events_.size() && events_[next_event_].time <= t + kTimeEpsilon) {
      const Event& e = events_[next_event_++];
      if (e.kind == EventKind::kAttach) {
        state_ = plant_.attach_object(state_);
        object_fixed_ = false;
        ++attaches_;
      } else {
        state_ = plant_.detach_object(state_);
        releases_.push_back({t, state_.object.p, e.target});
      }
    }
    if (object_fixed_ && !state_.attached) fixed_object_ = state_.object;
  }

  ContactFlags controller_flags(ContactFlags f) const {
    if (cfg_.model == DynamicsModel::kModel1) f.object = false;
    return f;
  }

  double object_mass_for_controller(const ContactFlags& f) const {
    return f.object ? object_.mass : 0.0;
  }

  Vec3 foot_target(int n, const Vec3& p_c, const Vec3& v_c, const MotionCommand& cmd) const {
    const Vec3 hip(model_.body.hip_offsets[n].x(), model_.body.hip_offsets[n].y(), 0.0);
    const Vec3 v_des = rotation_z(yaw_ref_) * Vec3(cmd.vx, cmd.vy, 0.0);
    return foot_placement(p_c, v_c, v_des, cfg_.gait_period, cfg_.placement_gain, hip, yaw_ref_);
  }

  // Model 1 lumps a held object into the trunk: combined CoM, mass and inertia.
  bool combined_body(const ContactFlags& raw) const {
    return cfg_.model == DynamicsModel::kModel1 && raw.object && object_.mass > 0.0;
  }

  void solve_mpc(double t, StateVec x0, const MotionCommand& cmd, const Measurement& meas) {
    const MpcConfig& mc = cfg_.mpc;
    SrbdBody body;
    body.mass = model_.body.upper_body_mass;
    body.inertia_body = model_.body.upper_body_inertia;
    const Mat3 r_body = rotation_from_euler(meas.body.theta);
    if (combined_body(flags_at(timeline_, t))) {
      const double m_ub = body.mass, m_o = object_.mass;
      const Mat3 i_ub = r_body * body.inertia_body * r_body.transpose();
      const Mat3 i_o = meas.object_r * object_.inertia * meas.object_r.transpose();
      const Mat3 i_h = combined_inertia(i_ub, m_ub, meas.body.p, i_o, m_o, meas.object_p);
      body.inertia_body = r_body.transpose() * i_h * r_body;
      body.mass = m_ub + m_o;
      x0.segment<3>(srbd::kPos) = combined_com(meas.body.p, m_ub, meas.object_p, m_o);
      x0.segment<3>(srbd::kVel) = combined_com(meas.body.v, m_ub, meas.object_v, m_o);
    }
    const ReferenceTrajectory ref = make_reference(cmd, x0, mc);
    std::vector<HorizonStep> steps(mc.horizon);
    bool transition = false;
    const ContactFlags now = controller_flags(flags_at(timeline_, t));
    for (int i = 0; i < mc.horizon; ++i) {
      const double ti = t + i * mc.dt;
      HorizonStep& s = steps[i];
      s.flags = controller_flags(flags_at(timeline_, std::min(ti, timeline_end())));
      if (s.flags.foot != now.foot || s.flags.object != now.object) transition = true;
      for (int n = 0; n < 2; ++n) {
        const FootInterval cur = foot_interval(timeline_, t, n);
        if (cur.stance && ti < cur.end - kTimeEpsilon) {
          s.feet[n] = meas.feet[n];
        } else if (!cur.stance && swing_[n]) {
          s.feet[n] = swing_[n]->target;
        } else {
          const Vec3 p = i > 0 ? Vec3(ref.x[i - 1].segment<3>(srbd::kPos)) : meas.body.p;
          const Vec3 v = i > 0 ? Vec3(ref.x[i - 1].segment<3>(srbd::kVel)) : meas.body.v;
          s.feet[n] = foot_target(n, p, v, cmd);
        }
      }
      if (s.flags.object) {
        s.object_mass = object_.mass;
        s.object_offset_body = r_body.transpose() * (meas.object_p - meas.body.p);
      }
    }
    MpcSolution sol;
    try {
      sol = mpc_.solve(x0, ref, steps, body);
    } catch (const SingularityError& e) {
      sol.status = QpStatus::kNumericalFailure;
      sol.diagnostic = e.what();
    }
    mpc_status_ = sol.status;
    MpcAudit a;
    a.time = t;
    a.optimal = sol.optimal();
    a.solve_ms = sol.solve_time_ms;
    a.transition = transition;
    a.f_ext_error = -1.0;
    if (sol.optimal()) {
      u_hold_ = sol.first();
      a.violation = constraint_violation(sol.inputs, steps, mc);
      for (int i = 0; i < mc.horizon; ++i) {
        if (!steps[i].flags.object) continue;
        const Vec3 want(0.0, 0.0, steps[i].object_mass * kGravity);
        a.f_ext_error = std::max(a.f_ext_error,
                                 (sol.inputs[i].segment<3>(srbd::kExternal) - want).norm());
      }
    }
    audit_.push_back(a);
  }

  double timeline_end() const { return std::max(duration_, 0.0); }

  // Body level: CoM and base orientation tracking the MPC prediction.
  IkTask body_task(const MotionCommand& cmd, const ContactFlags& f_now, bool combined,
                   const Measurement& meas, const TaskTerms& tasks) const {
    const int n = model_.num_dofs();
    Vec6 x, xd, x_des, xd_des;
    x << meas.body.p, meas.body.theta.vector();
    xd << meas.body.v, state_.joints.dq.segment<3>(3);
    x_des << com_ref_.x(), com_ref_.y(), cmd.height, cmd.roll, cmd.pitch, yaw_ref_;
    const Vec3 v_ref = rotation_z(yaw_ref_) * Vec3(cmd.vx, cmd.vy, 0.0);
    xd_des << v_ref, 0.0, 0.0, cmd.yaw_rate;
    Vec6 acc = desired_acceleration(x_des, xd_des, x, xd, cfg_.wbc.kp, cfg_.wbc.kd);
    // Feed-forward from the MPC contact forces.
    Vec3 f = Vec3::Zero();
    for (int s = 0; s < 2; ++s) {
      if (f_now.foot[s]) f += u_hold_.segment<3>(srbd::force_index(s));
    }
    if (f_now.object) f -= u_hold_.segment<3>(srbd::kExternal);
    const double mass = model_.body.upper_body_mass + (combined ? object_.mass : 0.0);
    acc.head<3>() += f / mass + srbd::gravity_vector();
    IkTask body;
    body.jac = MatX::Zero(6, n);
    body.jac.topRows<3>() = tasks.com_jac;
    body.jac.block<3, 3>(3, 3).setIdentity();
    body.acc = acc;
    body.bias = VecX::Zero(6);
    body.bias.head<3>() = tasks.com_bias;
    return body;
  }

  void swing_levels(double t, const ContactFlags& flags, const Measurement& meas,
                    const TaskTerms& tasks, WbcInput* in, std::vector<IkTask>* levels) {
    IkTask stance, swing;
    const int n = model_.num_dofs();
    std::vector<MatX> sj, wj;
    std::vector<VecX> sa, sb, wa, wb;
    for (int s = 0; s < 2; ++s) {
      if (flags.foot[s]) {
        swing_[s].reset();
        sj.push_back(tasks.foot_jac[s]);
        Vec6 a = Vec6::Zero();
        a.tail<3>() = -cfg_.stance_kd * tasks.foot_vel[s];
        sa.push_back(a);
        sb.push_back(tasks.foot_bias[s]);
        continue;
      }
      const FootInterval iv = foot_interval(timeline_, t, s);
      if (!swing_[s]) {
        SwingPlan plan;
        plan.start = meas.feet[s];
        plan.target = foot_target(s, meas.body.p, meas.body.v, current_command());
        plan.apex = cfg_.swing_apex;
        plan.duration = std::isfinite(iv.end) ? iv.duration() : cfg_.gait_period / 2.0;
        swing_[s] = plan;
      }
      const SwingReference ref = swing_trajectory(*swing_[s], iv.phase(t));
      in->f_swing[s] = swing_force(ref.p, ref.v, tasks.foot_pos[s], tasks.foot_vel[s],
                                   cfg_.swing_gains);
      wj.push_back(tasks.foot_jac[s].bottomRows<3>());
      wa.push_back(ref.a);
      wb.push_back(tasks.foot_bias[s].tail<3>());
    }
    auto stack = [&](const std::vector<MatX>& j, const std::vector<VecX>& a,
                     const std::vector<VecX>& b) {
      IkTask task;
      int rows = 0;
      for (const MatX& m : j) rows += static_cast<int>(m.rows());
      task.jac = MatX::Zero(rows, n);
      task.acc = VecX::Zero(rows);
      task.bias = VecX::Zero(rows);
      int r = 0;
      for (std::size_t i = 0; i < j.size(); ++i) {
        const int k = static_cast<int>(j[i].rows());
        task.jac.middleRows(r, k) = j[i];
        task.acc.segment(r, k) = a[i];
        task.bias.segment(r, k) = b[i];
        r += k;
      }
      return task;
    };
    levels->push_back(stack(sj, sa, sb));
    swing_task_ = stack(wj, wa, wb);
  }

  void hand_levels(double t, const ContactFlags& flags, const Measurement& meas,
                   const TaskTerms& tasks, WbcInput* in, std::vector<IkTask>* levels) {
    (void)meas;
    const int n = model_.num_dofs();
    std::vector<int> active;
    for (int h = 0; h < 2; ++h) {
      if (flags.hand[h]) active.push_back(h);
    }
    IkTask limbs = swing_task_;
    const int extra = 3 * static_cast<int>(active.size());
    const int rows0 = static_cast<int>(limbs.jac.rows());
    limbs.jac.conservativeResize(rows0 + extra, n);
    limbs.acc.conservativeResize(rows0 + extra);
    limbs.bias.conservativeResize(rows0 + extra);
    const Vec3 base = state_.joints.q.head<3>();
    const Mat3 rz = rotation_z(state_.joints.q[5]);
    const Vec3 base_v = state_.joints.dq.head<3>();
    int r = rows0;
    for (int h : active) {
      const Vec3 target = base + rz * hand_target_h(h, t);
      in->f_hand[h] = hand_force(target, base_v, tasks.hand_pos[h], tasks.hand_vel[h],
                                 cfg_.hand_gains);
      limbs.jac.middleRows<3>(r) = tasks.hand_jac[h];
      limbs.acc.segment<3>(r).setZero();
      limbs.bias.segment<3>(r) = tasks.hand_bias[h];
      r += 3;
    }
    levels->push_back(limbs);
  }

  IkTask posture_task() const {
    const int n = model_.num_dofs(), nb = model_.base_dofs(), na = model_.num_actuated();
    IkTask p;
    p.jac = MatX::Zero(na, n);
    p.jac.rightCols(na).setIdentity();
    p.acc = cfg_.posture_kp * (q_nominal_ - state_.joints.q).tail(na) -
            cfg_.posture_kd * state_.joints.dq.tail(na);
    p.bias = VecX::Zero(na);
    (void)nb;
    return p;
  }

  void check_fall() {
    const RigidBodyState b = plant_.measure(state_).body;
    std::string what;
    if (std::abs(b.theta.roll) > cfg_.fall_angle || std::abs(b.theta.pitch) > cfg_.fall_angle) {
      what = "trunk tilt";
    } else if (b.p.z() < cfg_.fall_height_ratio * height_) {
      what = "com height";
    }
    if (what.empty()) return;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "fall detected (%s) at t = %.3f s", what.c_str(), state_.time);
    fall_ = buf;
  }

  const MotionCommand& current_command() const { return segments_[current_segment_].command; }

  void advance_reference(const MotionCommand& cmd) {
    const double dt = cfg_.wbc_dt;
    yaw_ref_ += cmd.yaw_rate * dt;
    com_ref_ += rotation_z(yaw_ref_) * Vec3(cmd.vx, cmd.vy, 0.0) * dt;
    com_ref_.z() = cmd.height;
  }

  RobotModel model_;
  ObjectParams object_;
  ControllerConfig cfg_;
  std::vector<Segment> segments_;
  std::vector<Event> events_;
  double duration_;
  Plant plant_;
  MpcController mpc_;
  RobotFrames frames_;
  Timeline timeline_;
  int mpc_every_ = 30;
  int substeps_ = 2;

  PlantState state_;
  VecX q_nominal_;
  bool object_fixed_ = false;
  ObjectState fixed_object_;
  Vec3 com_ref_ = Vec3::Zero();
  double yaw_ref_ = 0.0;
  double height_ = 0.53;
  std::array<Vec3, 2> hand_from_{Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> hand_to_{Vec3::Zero(), Vec3::Zero()};
  double hand_blend_start_ = 0.0, hand_blend_len_ = 0.0;
  std::size_t current_segment_ = 0;
  std::size_t next_event_ = 0;
  long tick_ = 0;
  InputVec u_hold_ = InputVec::Zero();
  ContactFlags mpc_flags_;
  QpStatus mpc_status_ = QpStatus::kOptimal;
  VecX last_tau_;
  std::array<std::optional<SwingPlan>, 2> swing_;
  IkTask swing_task_;
  std::vector<MpcAudit> audit_;
  std::vector<double> wbc_ms_;
  std::vector<ReleaseRecord> releases_;
  int attaches_ = 0;
  std::optional<std::string> fall_;
};

}  // namespace mcmpc

#endif  // MCMPC_CLOSED_LOOP_HPP_
