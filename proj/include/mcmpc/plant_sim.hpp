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

// Articulated plant: penalty ground contact, actuator clipping, and a carried
// object that is either welded to the hands or flying free.

#ifndef MCMPC_PLANT_SIM_HPP_
#define MCMPC_PLANT_SIM_HPP_

#include <cstdio>
#include <string>
#include <vector>

#include "mcmpc/common.hpp"
#include "mcmpc/robot_model.hpp"
#include "mcmpc/srbd_dynamics.hpp"
#include "mcmpc/whole_body_control.hpp"

namespace mcmpc {

struct GroundModel {
  double stiffness = 2e5;             // N/m
  double damping = 1500.0;            // N s/m
  double friction = 0.8;              // mu_plant
  double tangential_damping = 3000.0;  // N s/m, stiction regularization
  double height = 0.0;

  void validate() const {
    if (!(stiffness > 0.0) || !(damping > 0.0) || !(tangential_damping > 0.0)) {
      throw ConfigError("ground: stiffness and damping must be positive");
    }
    if (!(friction >= 0.0)) throw ConfigError("ground: friction must be non-negative");
  }
};

enum class Integrator { kSemiImplicitEuler, kRk4 };

struct PlantConfig {
  GroundModel ground;
  double dt = 5e-4;
  Integrator integrator = Integrator::kSemiImplicitEuler;
  bool clip_torques = true;
  bool contact = true;
  double attach_distance = 0.05;  // m, grasp midpoint to object CoM

  void validate() const {
    ground.validate();
    if (!(dt > 0.0) || dt > 1e-3) throw ConfigError("plant: dt must be in (0, 1 ms]");
    if (!(attach_distance > 0.0)) throw ConfigError("plant: attach distance must be positive");
  }
};

struct ObjectState {
  Vec3 p = Vec3::Zero();
  Mat3 r = Mat3::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();  // world frame
};

// Object CoM in each hand link frame while welded; half the mass on each.
struct GraspState {
  std::array<Vec3, 2> local{Vec3::Zero(), Vec3::Zero()};
  std::array<Mat3, 2> r_rel{Mat3::Identity(), Mat3::Identity()};  // object axes per hand
};

struct ContactSample {
  Vec3 point = Vec3::Zero();
  Vec3 force = Vec3::Zero();
  double penetration = 0.0;
};

struct PlantState {
  JointState joints;
  ObjectState object;
  bool attached = false;
  GraspState grasp;
  double time = 0.0;
  std::vector<ContactSample> contacts;  // last evaluated robot ground contacts
  VecX tau_applied;                     // last actuator torques after clipping
};

struct Measurement {
  RigidBodyState body;  // trunk Euler angles, robot CoM, trunk angular rate
  JointState joints;
  std::array<Vec3, 2> feet{Vec3::Zero(), Vec3::Zero()};  // sole points
  std::array<Vec3, 2> hands{Vec3::Zero(), Vec3::Zero()};
  Vec3 object_p = Vec3::Zero();
  Mat3 object_r = Mat3::Identity();
  Vec3 object_v = Vec3::Zero();
};

namespace detail {

// Spring-damper with regularized Coulomb friction; zero when not touching.
inline Vec3 penalty_force(const GroundModel& g, const Vec3& p, const Vec3& v, double* pen) {
  *pen = g.height - p.z();
  if (*pen <= 0.0) return Vec3::Zero();
  const double fn = std::max(0.0, g.stiffness * *pen - g.damping * v.z());
  Vec3 ft(-g.tangential_damping * v.x(), -g.tangential_damping * v.y(), 0.0);
  const double cap = g.friction * fn;
  const double mag = ft.norm();
  if (mag > cap) ft *= cap / mag;
  return Vec3(ft.x(), ft.y(), fn);
}

}  // namespace detail

class Plant {
 public:
  Plant(RobotModel model, ObjectParams object, PlantConfig cfg = {})
      : model_(std::move(model)), object_(std::move(object)), cfg_(cfg) {
    cfg_.validate();
    if (!model_.tree.floating_base) throw ModelError("plant: floating-base model required");
    for (int s = 0; s < 2; ++s) {
      foot_links_[s] = model_.tree.find_link(model_.body.feet[s].link);
      hand_links_[s] = model_.tree.find_link(model_.body.hands[s].link);
    }
  }

  const RobotModel& model() const { return model_; }
  const ObjectParams& object() const { return object_; }
  const PlantConfig& config() const { return cfg_; }

  PlantState initial_state(const VecX& q, const ObjectState& obj = {}) const {
    if (q.size() != model_.num_dofs()) throw std::invalid_argument("plant: q size mismatch");
    PlantState s;
    s.joints.q = q;
    s.joints.dq = VecX::Zero(q.size());
    s.object = obj;
    s.tau_applied = VecX::Zero(model_.num_actuated());
    return s;
  }

  // Torque after saturation; joints at their speed limit cannot be pushed
  // further.
  VecX actuate(const VecX& tau, const VecX& dq) const {
    const int na = model_.num_actuated(), nb = model_.base_dofs();
    if (tau.size() != na) throw std::invalid_argument("plant: torque vector size mismatch");
    VecX out = tau;
    if (!cfg_.clip_torques) return out;
    for (int j = 0; j < na; ++j) {
      const double tmax = model_.limits.torque_max[j];
      out[j] = std::clamp(out[j], -tmax, tmax);
      if (model_.limits.velocity_max.size() == na) {
        const double w = dq[nb + j], wmax = model_.limits.velocity_max[j];
        if ((w > wmax && out[j] > 0.0) || (w < -wmax && out[j] < 0.0)) out[j] = 0.0;
      }
    }
    return out;
  }

  PlantState step(const PlantState& s, const VecX& tau, double dt) const {
    if (!(dt > 0.0) || dt > 1e-3 + 1e-15) throw std::invalid_argument("plant: dt must be <= 1 ms");
    const KinematicTree tree = s.attached ? merged_tree(s.grasp) : model_.tree;
    PlantState out = s;
    out.tau_applied = actuate(tau, s.joints.dq);
    const int n = model_.num_dofs();
    VecX tau_full = VecX::Zero(n);
    tau_full.tail(model_.num_actuated()) = out.tau_applied;
    const VecX& q = s.joints.q;
    const VecX& dq = s.joints.dq;
    if (cfg_.integrator == Integrator::kSemiImplicitEuler) {
      out.joints.dq = implicit_velocity(tree, q, dq, tau_full, dt, &out.contacts);
      out.joints.q = q + dt * out.joints.dq;
    } else {
      auto f = [&](const VecX& qq, const VecX& vv) {
        return acceleration(tree, qq, vv, tau_full, nullptr);
      };
      const VecX a1 = acceleration(tree, q, dq, tau_full, &out.contacts);
      const VecX v1 = dq;
      const VecX a2 = f(q + 0.5 * dt * v1, dq + 0.5 * dt * a1), v2 = dq + 0.5 * dt * a1;
      const VecX a3 = f(q + 0.5 * dt * v2, dq + 0.5 * dt * a2), v3 = dq + 0.5 * dt * a2;
      const VecX a4 = f(q + dt * v3, dq + dt * a3), v4 = dq + dt * a3;
      out.joints.q = q + dt / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
      out.joints.dq = dq + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    }
    out.time = s.time + dt;
    if (!out.joints.q.allFinite() || !out.joints.dq.allFinite()) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "plant: simulation blow-up at t = %.6f s", out.time);
      throw NumericalError(buf);
    }
    if (s.attached) {
      sync_object(&out);
    } else {
      step_object(&out.object, dt);
    }
    return out;
  }

  PlantState attach_object(const PlantState& s) const {
    if (s.attached) return s;
    const TreeKinematics k = forward_kinematics(model_.tree, s.joints.q, s.joints.dq);
    const Vec3 mid = grasp_midpoint(k);
    const double dist = (mid - s.object.p).norm();
    if (dist >= cfg_.attach_distance) {
      throw std::runtime_error("attach_object: object out of reach (" + std::to_string(dist) +
                               " m from the grasp point)");
    }
    PlantState out = s;
    out.attached = true;
    for (int h = 0; h < 2; ++h) {
      const int l = hand_links_[h];
      out.grasp.local[h] = k.rotation[l].transpose() * (s.object.p - k.position[l]);
      out.grasp.r_rel[h] = k.rotation[l].transpose() * s.object.r;
    }
    // Perfectly plastic grasp: generalized momentum of robot plus object is kept.
    const KinematicTree merged = merged_tree(out.grasp);
    VecX h = mass_matrix(model_.tree, s.joints.q) * s.joints.dq;
    const Mat3 i_world = s.object.r * object_.inertia * s.object.r.transpose();
    for (int i = 0; i < 2; ++i) {
      const MatX jac = point_jacobian(model_.tree, k, hand_links_[i], out.grasp.local[i]);
      h += jac.bottomRows<3>().transpose() * (0.5 * object_.mass * s.object.v);
      h += jac.topRows<3>().transpose() * (0.5 * i_world * s.object.omega);
    }
    out.joints.dq = mass_matrix(merged, s.joints.q).llt().solve(h);
    sync_object(&out);
    return out;
  }

  PlantState detach_object(const PlantState& s) const {
    if (!s.attached) return s;
    PlantState out = s;
    sync_object(&out);
    out.attached = false;
    return out;
  }

  Measurement measure(const PlantState& s) const {
    Measurement m;
    m.joints = s.joints;
    const TreeKinematics k = forward_kinematics(model_.tree, s.joints.q, s.joints.dq);
    m.body.theta = EulerAngles::from_vector(s.joints.q.segment<3>(3));
    m.body.p = center_of_mass(model_.tree, k);
    m.body.v = linear_momentum(model_.tree, k) / model_.tree.total_mass();
    const int root = model_.tree.root_link;
    m.body.omega = k.rotation[root] * k.velocity[root].head<3>();
    for (int i = 0; i < 2; ++i) {
      m.feet[i] = point_position(k, foot_links_[i], model_.body.feet[i].sole);
      m.hands[i] = point_position(k, hand_links_[i], model_.body.hands[i].point);
    }
    m.object_p = s.object.p;
    m.object_r = s.object.r;
    m.object_v = s.object.v;
    return m;
  }

  // Linear and angular momentum about the origin of robot plus object.
  Vec6 total_momentum(const PlantState& s) const {
    const KinematicTree tree = s.attached ? merged_tree(s.grasp) : model_.tree;
    const TreeKinematics k = forward_kinematics(tree, s.joints.q, s.joints.dq);
    Vec6 out = Vec6::Zero();
    for (int i = 0; i < tree.num_links(); ++i) {
      const Link& l = tree.links[i];
      if (l.mass <= 0.0) continue;
      const Vec3 c = point_position(k, i, l.com);
      const Vec6 vel = point_velocity(k, i, l.com);
      const Vec3 p = l.mass * vel.tail<3>();
      const Mat3 iw = k.rotation[i] * l.inertia * k.rotation[i].transpose();
      out.head<3>() += c.cross(p) + iw * vel.head<3>();
      out.tail<3>() += p;
    }
    if (!s.attached) {
      const Vec3 p = object_.mass * s.object.v;
      out.head<3>() += s.object.p.cross(p) + s.object.r * object_.inertia *
                                                 s.object.r.transpose() * s.object.omega;
      out.tail<3>() += p;
    }
    return out;
  }

  double total_energy(const PlantState& s) const {
    const KinematicTree tree = s.attached ? merged_tree(s.grasp) : model_.tree;
    const TreeKinematics k = forward_kinematics(tree, s.joints.q);
    double e = kinetic_energy(tree, s.joints.q, s.joints.dq) + potential_energy(tree, k);
    if (!s.attached) {
      e += 0.5 * object_.mass * s.object.v.squaredNorm() + object_.mass * kGravity * s.object.p.z();
      e += 0.5 * s.object.omega.dot(s.object.r * object_.inertia * s.object.r.transpose() *
                                    s.object.omega);
    }
    return e;
  }

  // Tree with half the object welded to each hand link.
  KinematicTree merged_tree(const GraspState& g) const {
    KinematicTree tree = model_.tree;
    const double mh = 0.5 * object_.mass;
    if (mh <= 0.0) return tree;
    for (int h = 0; h < 2; ++h) {
      Link& l = tree.links[hand_links_[h]];
      const Mat3& r = g.r_rel[h];
      const Mat3 i_obj = r * (0.5 * object_.inertia) * r.transpose();
      const double m = l.mass + mh;
      const Vec3 c = (l.mass * l.com + mh * g.local[h]) / m;
      l.inertia = parallel_axis(l.inertia, l.mass, l.com - c) +
                  parallel_axis(i_obj, mh, g.local[h] - c);
      l.com = c;
      l.mass = m;
    }
    return tree;
  }

 private:
  Vec3 grasp_midpoint(const TreeKinematics& k) const {
    Vec3 mid = Vec3::Zero();
    for (int h = 0; h < 2; ++h) {
      mid += 0.5 * point_position(k, hand_links_[h], model_.body.hands[h].point);
    }
    return mid;
  }

  // Velocity update with the contact spring-damper taken at the end of the
  // step: f = f0 - D J dq+. Each touching corner sticks, slides on the cone
  // edge, or separates; modes are updated until consistent.
  VecX implicit_velocity(const KinematicTree& tree, const VecX& q, const VecX& dq,
                         const VecX& tau_full, double dt,
                         std::vector<ContactSample>* report) const {
    const MatX m = mass_matrix(tree, q);
    const VecX rhs0 = m * dq + dt * (tau_full - bias_forces(tree, q, dq));
    if (report) report->clear();
    if (!cfg_.contact) return m.llt().solve(rhs0);
    const GroundModel& g = cfg_.ground;
    const TreeKinematics k = forward_kinematics(tree, q, dq);
    enum class Mode { kStick, kSlide, kOff };
    struct Active {
      int sample;
      Eigen::Matrix<double, 3, Eigen::Dynamic> jac;
      Vec3 f0;
      Vec3 d;
      Mode mode = Mode::kStick;
      Vec3 slide_dir = Vec3::Zero();  // unit tangential force direction
    };
    std::vector<Active> active;
    std::vector<ContactSample> samples;
    for (int s = 0; s < 2; ++s) {
      const int link = foot_links_[s];
      for (const Vec3& c : model_.body.feet[s].corners()) {
        const Vec3 p = point_position(k, link, c);
        const double pen = g.height - p.z();
        samples.push_back({p, Vec3::Zero(), std::max(pen, 0.0)});
        if (pen <= 0.0) continue;
        Active a;
        a.sample = static_cast<int>(samples.size()) - 1;
        a.jac = point_jacobian(tree, k, link, c).bottomRows<3>();
        a.f0 = Vec3(0.0, 0.0, g.stiffness * pen);
        a.d = Vec3(g.tangential_damping, g.tangential_damping, g.damping + g.stiffness * dt);
        active.push_back(std::move(a));
      }
    }
    auto force = [&](const Active& a, const VecX& v) -> Vec3 {
      const Vec3 jv = a.jac * v;
      switch (a.mode) {
        case Mode::kOff:
          return Vec3::Zero();
        case Mode::kStick:
          return a.f0 - a.d.cwiseProduct(jv);
        case Mode::kSlide: {
          const double fn = a.f0.z() - a.d.z() * jv.z();
          return (Vec3::UnitZ() + g.friction * a.slide_dir) * fn;
        }
      }
      return Vec3::Zero();
    };
    if (active.empty()) {
      if (report) *report = std::move(samples);
      return m.llt().solve(rhs0);
    }
    VecX v = dq;
    const int max_passes = 2 * static_cast<int>(active.size()) + 2;
    bool consistent = false;
    for (int pass = 0; pass < max_passes; ++pass) {
      MatX lhs = m;
      VecX rhs = rhs0;
      for (const Active& a : active) {
        if (a.mode == Mode::kOff) continue;
        const auto& j = a.jac;
        if (a.mode == Mode::kStick) {
          lhs += dt * j.transpose() * a.d.asDiagonal() * j;
          rhs += dt * j.transpose() * a.f0;
        } else {
          const Vec3 w = Vec3::UnitZ() + g.friction * a.slide_dir;
          lhs += (dt * a.d.z()) * (j.transpose() * w) * j.row(2);
          rhs += (dt * a.f0.z()) * (j.transpose() * w);
        }
      }
      v = lhs.partialPivLu().solve(rhs);
      bool changed = false;
      for (Active& a : active) {
        const Vec3 f = force(a, v);
        const Vec3 jv = a.jac * v;
        if (a.mode == Mode::kOff) {
          // Re-engage if the spring would push at the new velocity.
          if (a.f0.z() - a.d.z() * jv.z() > 0.0) {
            a.mode = Mode::kStick;
            changed = true;
          }
        } else if (f.z() < 0.0) {
          a.mode = Mode::kOff;
          changed = true;
        } else if (a.mode == Mode::kStick && f.head<2>().norm() > g.friction * f.z()) {
          a.mode = Mode::kSlide;
          a.slide_dir = Vec3(f.x(), f.y(), 0.0).normalized();
          changed = true;
        } else if (a.mode == Mode::kSlide) {
          // Velocity no longer opposes the friction force: stick again.
          if (a.slide_dir.dot(jv) > 0.0) {
            a.mode = Mode::kStick;
            changed = true;
          }
        }
      }
      if (!changed) {
        consistent = true;
        break;
      }
    }
    std::vector<Vec3> forces;
    for (const Active& a : active) forces.push_back(force(a, v));
    if (!consistent) {
      // Fall back to the projected forces applied explicitly.
      VecX rhs = rhs0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        Vec3& f = forces[i];
        if (f.z() <= 0.0) {
          f.setZero();
        } else {
          const double cap = g.friction * f.z(), mag = f.head<2>().norm();
          if (mag > cap) f.head<2>() *= cap / mag;
        }
        rhs += dt * active[i].jac.transpose() * f;
      }
      v = m.llt().solve(rhs);
    }
    for (std::size_t i = 0; i < active.size(); ++i) samples[active[i].sample].force = forces[i];
    if (report) *report = std::move(samples);
    return v;
  }

  VecX acceleration(const KinematicTree& tree, const VecX& q, const VecX& dq,
                    const VecX& tau_full, std::vector<ContactSample>* report) const {
    VecX gen = tau_full;
    if (cfg_.contact) {
      const TreeKinematics k = forward_kinematics(tree, q, dq);
      if (report) report->clear();
      for (int s = 0; s < 2; ++s) {
        const int link = foot_links_[s];
        for (const Vec3& c : model_.body.feet[s].corners()) {
          const Vec3 p = point_position(k, link, c);
          double pen = 0.0;
          const Vec3 v = point_velocity(k, link, c).tail<3>();
          const Vec3 f = detail::penalty_force(cfg_.ground, p, v, &pen);
          if (report) report->push_back({p, f, std::max(pen, 0.0)});
          if (f.isZero(0.0)) continue;
          gen += point_jacobian(tree, k, link, c).bottomRows<3>().transpose() * f;
        }
      }
    }
    return mass_matrix(tree, q).llt().solve(gen - bias_forces(tree, q, dq));
  }

  void sync_object(PlantState* s) const {
    const TreeKinematics k = forward_kinematics(model_.tree, s->joints.q, s->joints.dq);
    ObjectState& o = s->object;
    o.p.setZero();
    o.v.setZero();
    o.omega.setZero();
    for (int h = 0; h < 2; ++h) {
      const int l = hand_links_[h];
      o.p += 0.5 * point_position(k, l, s->grasp.local[h]);
      const Vec6 pv = point_velocity(k, l, s->grasp.local[h]);
      o.v += 0.5 * pv.tail<3>();
      o.omega += 0.5 * pv.head<3>();
    }
    o.r = k.rotation[hand_links_[0]] * s->grasp.r_rel[0];
  }

  // Free body with a single support point below the CoM. Under gravity alone
  // the update is the exact ballistic solution.
  void step_object(ObjectState* o, double dt) const {
    Vec3 a(0.0, 0.0, -kGravity);
    if (cfg_.contact && object_.mass > 0.0) {
      double pen = 0.0;
      const Vec3 bottom = o->p - Vec3(0.0, 0.0, object_.bottom_offset());
      a += detail::penalty_force(cfg_.ground, bottom, o->v, &pen) / object_.mass;
    }
    o->p += dt * o->v + 0.5 * dt * dt * a;
    o->v += dt * a;
    if (o->omega.squaredNorm() > 0.0) {
      const Mat3 iw = o->r * object_.inertia * o->r.transpose();
      if (iw.determinant() > 0.0) {
        o->omega += dt * iw.ldlt().solve(-o->omega.cross(iw * o->omega));
      }
      const double angle = o->omega.norm() * dt;
      if (angle > 0.0) {
        o->r = Eigen::AngleAxisd(angle, o->omega.normalized()).toRotationMatrix() * o->r;
      }
    }
  }

  RobotModel model_;
  ObjectParams object_;
  PlantConfig cfg_;
  std::array<int, 2> foot_links_{};
  std::array<int, 2> hand_links_{};
};

}  // namespace mcmpc

#endif  // MCMPC_PLANT_SIM_HPP_
