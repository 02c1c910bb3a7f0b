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

// Kinematic trees of single-DoF joints and the recursive algorithms on them:
// forward kinematics, point Jacobians, the composite-rigid-body algorithm
// (mass matrix) and the recursive Newton-Euler algorithm (inverse dynamics).
//
// Spatial vectors are ordered [angular; linear]. A floating base is modelled
// as a chain of three prismatic (x, y, z) and three revolute (yaw, pitch,
// roll) massless joints, so the base coordinates are
// q[0..2] = position and q[3..5] = (roll, pitch, yaw), with
// dq[3..5] = Euler-angle rates.

#ifndef MCMPC_KINEMATIC_TREE_HPP_
#define MCMPC_KINEMATIC_TREE_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcmpc/common.hpp"
#include "mcmpc/spatial_math.hpp"

namespace mcmpc {

enum class JointType { kRevolute, kPrismatic };

struct Link {
  std::string name;
  int parent = -1;  // -1: attached to the world frame
  JointType joint = JointType::kRevolute;
  Vec3 axis = Vec3::UnitZ();                 // joint frame
  Vec3 origin = Vec3::Zero();                // joint frame in parent frame
  Mat3 origin_rotation = Mat3::Identity();   // joint frame in parent frame
  double mass = 0.0;
  Vec3 com = Vec3::Zero();                   // link frame
  Mat3 inertia = Mat3::Zero();               // about the CoM, link axes
  int dof = -1;                              // generalized coordinate index
  bool virtual_base = false;                 // part of the floating-base chain
};

// Links are stored in topological order: parent index < own index.
struct KinematicTree {
  std::vector<Link> links;
  bool floating_base = false;
  int root_link = 0;  // the first physical (non-virtual) link

  int num_links() const { return static_cast<int>(links.size()); }
  int num_dofs() const { return static_cast<int>(links.size()); }

  int find_link(const std::string& name) const {
    for (int i = 0; i < num_links(); ++i) {
      if (links[i].name == name) return i;
    }
    throw ModelError("unknown link '" + name + "'");
  }

  double total_mass() const {
    double m = 0.0;
    for (const auto& l : links) m += l.mass;
    return m;
  }

  // Link index driven by generalized coordinate `dof`.
  int link_of_dof(int dof) const {
    for (int i = 0; i < num_links(); ++i) {
      if (links[i].dof == dof) return i;
    }
    throw ModelError("no link drives coordinate " + std::to_string(dof));
  }

  // True if `ancestor` is on the path from `link` to the root (inclusive).
  bool is_ancestor(int ancestor, int link) const {
    for (int j = link; j >= 0; j = links[j].parent) {
      if (j == ancestor) return true;
    }
    return false;
  }
};

// Prepends the six-joint floating-base chain; `body` becomes the child of the
// roll joint. Returns the new tree with dofs renumbered (base first).
inline KinematicTree with_floating_base(const KinematicTree& fixed) {
  KinematicTree out;
  out.floating_base = true;
  struct BaseJoint {
    const char* name;
    JointType type;
    Vec3 axis;
    int dof;
  };
  const BaseJoint chain[6] = {
      {"base_x", JointType::kPrismatic, Vec3::UnitX(), 0},
      {"base_y", JointType::kPrismatic, Vec3::UnitY(), 1},
      {"base_z", JointType::kPrismatic, Vec3::UnitZ(), 2},
      {"base_yaw", JointType::kRevolute, Vec3::UnitZ(), 5},
      {"base_pitch", JointType::kRevolute, Vec3::UnitY(), 4},
      {"base_roll", JointType::kRevolute, Vec3::UnitX(), 3},
  };
  for (int i = 0; i < 5; ++i) {
    Link l;
    l.name = chain[i].name;
    l.parent = i - 1;
    l.joint = chain[i].type;
    l.axis = chain[i].axis;
    l.dof = chain[i].dof;
    l.virtual_base = true;
    out.links.push_back(l);
  }
  // The roll joint carries the physical root body.
  const int offset = 5;
  for (const Link& src : fixed.links) {
    Link l = src;
    if (l.parent < 0) {
      l.parent = 4;
      l.joint = chain[5].type;
      l.axis = chain[5].axis;
      l.origin.setZero();
      l.origin_rotation.setIdentity();
      l.dof = chain[5].dof;
    } else {
      l.parent += offset;
      l.dof = -1;
    }
    out.links.push_back(l);
  }
  int next = 6;
  for (int i = offset; i < out.num_links(); ++i) {
    if (out.links[i].dof < 0) out.links[i].dof = next++;
  }
  out.root_link = offset;
  return out;
}

// Spatial operators -------------------------------------------------------

// Motion transform parent -> child for a child frame with pose (r, p) in the
// parent frame.
inline Mat6 motion_transform(const Mat3& r, const Vec3& p) {
  Mat6 x = Mat6::Zero();
  x.topLeftCorner<3, 3>() = r.transpose();
  x.bottomRightCorner<3, 3>() = r.transpose();
  x.bottomLeftCorner<3, 3>() = -r.transpose() * skew(p);
  return x;
}

inline Mat6 motion_cross(const Vec6& v) {
  Mat6 m = Mat6::Zero();
  const Mat3 w = skew(v.head<3>());
  m.topLeftCorner<3, 3>() = w;
  m.bottomRightCorner<3, 3>() = w;
  m.bottomLeftCorner<3, 3>() = skew(v.tail<3>());
  return m;
}

inline Mat6 force_cross(const Vec6& v) { return -motion_cross(v).transpose(); }

inline Mat6 spatial_inertia(double mass, const Vec3& com, const Mat3& inertia_com) {
  Mat6 i = Mat6::Zero();
  const Mat3 c = skew(com);
  i.topLeftCorner<3, 3>() = inertia_com + mass * c * c.transpose();
  i.topRightCorner<3, 3>() = mass * c;
  i.bottomLeftCorner<3, 3>() = mass * c.transpose();
  i.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return i;
}

inline Vec6 motion_subspace(const Link& l) {
  Vec6 s = Vec6::Zero();
  if (l.joint == JointType::kRevolute) {
    s.head<3>() = l.axis;
  } else {
    s.tail<3>() = l.axis;
  }
  return s;
}

// Forward kinematics -------------------------------------------------------

struct TreeKinematics {
  std::vector<Mat3> rotation;   // link frame -> world
  std::vector<Vec3> position;   // link origin in world
  std::vector<Mat6> x_up;       // motion transform parent -> link
  std::vector<Vec6> velocity;   // spatial velocity, link coordinates
  std::vector<Vec6> bias_acc;   // spatial acceleration at qdd = 0, no gravity
};

// Link pose relative to its parent for joint value `qi`.
inline void joint_pose(const Link& l, double qi, Mat3* r, Vec3* p) {
  if (l.joint == JointType::kRevolute) {
    *r = l.origin_rotation * Eigen::AngleAxisd(qi, l.axis).toRotationMatrix();
    *p = l.origin;
  } else {
    *r = l.origin_rotation;
    *p = l.origin + l.origin_rotation * (l.axis * qi);
  }
}

inline TreeKinematics forward_kinematics(const KinematicTree& tree,
                                         const Eigen::Ref<const VecX>& q,
                                         const Eigen::Ref<const VecX>& dq) {
  const int n = tree.num_links();
  TreeKinematics k;
  k.rotation.resize(n);
  k.position.resize(n);
  k.x_up.resize(n);
  k.velocity.resize(n);
  k.bias_acc.resize(n);
  for (int i = 0; i < n; ++i) {
    const Link& l = tree.links[i];
    Mat3 r;
    Vec3 p;
    joint_pose(l, q[l.dof], &r, &p);
    k.x_up[i] = motion_transform(r, p);
    const Vec6 vj = motion_subspace(l) * dq[l.dof];
    if (l.parent < 0) {
      k.rotation[i] = r;
      k.position[i] = p;
      k.velocity[i] = vj;
      k.bias_acc[i].setZero();
    } else {
      k.rotation[i] = k.rotation[l.parent] * r;
      k.position[i] = k.position[l.parent] + k.rotation[l.parent] * p;
      k.velocity[i] = k.x_up[i] * k.velocity[l.parent] + vj;
      k.bias_acc[i] = k.x_up[i] * k.bias_acc[l.parent] + motion_cross(k.velocity[i]) * vj;
    }
  }
  return k;
}

inline TreeKinematics forward_kinematics(const KinematicTree& tree,
                                         const Eigen::Ref<const VecX>& q) {
  return forward_kinematics(tree, q, VecX::Zero(tree.num_dofs()));
}

inline Vec3 point_position(const TreeKinematics& k, int link, const Vec3& local) {
  return k.position[link] + k.rotation[link] * local;
}

// World-frame [angular; linear] velocity of a body-fixed point.
inline Vec6 point_velocity(const TreeKinematics& k, int link, const Vec3& local) {
  const Vec3 w = k.velocity[link].head<3>();
  const Vec3 v = k.velocity[link].tail<3>() + w.cross(local);
  Vec6 out;
  out << k.rotation[link] * w, k.rotation[link] * v;
  return out;
}

// World-frame [angular; linear] acceleration of a body-fixed point when
// qdd = 0 (the J-dot * q-dot term).
inline Vec6 point_bias_acceleration(const TreeKinematics& k, int link,
                                    const Vec3& local) {
  const Vec3 w = k.velocity[link].head<3>();
  const Vec3 v_point = k.velocity[link].tail<3>() + w.cross(local);
  const Vec3 wd = k.bias_acc[link].head<3>();
  const Vec3 a = k.bias_acc[link].tail<3>() + wd.cross(local) + w.cross(v_point);
  Vec6 out;
  out << k.rotation[link] * wd, k.rotation[link] * a;
  return out;
}

// 6 x n geometric Jacobian ([angular; linear], world frame) of a point fixed
// on `link` at `local` (link coordinates).
inline MatX point_jacobian(const KinematicTree& tree, const TreeKinematics& k,
                           int link, const Vec3& local) {
  MatX jac = MatX::Zero(6, tree.num_dofs());
  const Vec3 p = point_position(k, link, local);
  for (int j = link; j >= 0; j = tree.links[j].parent) {
    const Link& l = tree.links[j];
    const Vec3 axis = k.rotation[j] * l.axis;
    if (l.joint == JointType::kRevolute) {
      jac.block<3, 1>(0, l.dof) = axis;
      jac.block<3, 1>(3, l.dof) = axis.cross(p - k.position[j]);
    } else {
      jac.block<3, 1>(3, l.dof) = axis;
    }
  }
  return jac;
}

// Dynamics -----------------------------------------------------------------

inline Mat6 link_spatial_inertia(const Link& l) {
  return spatial_inertia(l.mass, l.com, l.inertia);
}

// Recursive Newton-Euler: tau = M(q) qdd + C(q, dq) + g(q) - J^T f_ext.
// `gravity` is the world gravity vector; `external` (optional) holds one
// world-frame spatial force per link, expressed about the world origin.
inline VecX inverse_dynamics(const KinematicTree& tree,
                             const Eigen::Ref<const VecX>& q,
                             const Eigen::Ref<const VecX>& dq,
                             const Eigen::Ref<const VecX>& qdd,
                             const Vec3& gravity = Vec3(0.0, 0.0, -kGravity),
                             const std::vector<Vec6>* external = nullptr) {
  const int n = tree.num_links();
  std::vector<Mat6> x_up(n);
  std::vector<Vec6> v(n), a(n), f(n);
  std::vector<Mat3> rot_world(n);
  std::vector<Vec3> pos_world(n);
  Vec6 a_root = Vec6::Zero();
  a_root.tail<3>() = -gravity;
  for (int i = 0; i < n; ++i) {
    const Link& l = tree.links[i];
    Mat3 r;
    Vec3 p;
    joint_pose(l, q[l.dof], &r, &p);
    x_up[i] = motion_transform(r, p);
    const Vec6 s = motion_subspace(l);
    const Vec6 vj = s * dq[l.dof];
    if (l.parent < 0) {
      v[i] = vj;
      a[i] = x_up[i] * a_root + s * qdd[l.dof];
      rot_world[i] = r;
      pos_world[i] = p;
    } else {
      v[i] = x_up[i] * v[l.parent] + vj;
      a[i] = x_up[i] * a[l.parent] + s * qdd[l.dof] + motion_cross(v[i]) * vj;
      rot_world[i] = rot_world[l.parent] * r;
      pos_world[i] = pos_world[l.parent] + rot_world[l.parent] * p;
    }
    const Mat6 inertia = link_spatial_inertia(l);
    f[i] = inertia * a[i] + force_cross(v[i]) * (inertia * v[i]);
    if (external != nullptr) {
      // World force about the world origin -> link coordinates.
      const Vec6& fe = (*external)[i];
      const Mat3 rt = rot_world[i].transpose();
      Vec6 fl;
      fl.tail<3>() = rt * fe.tail<3>();
      fl.head<3>() = rt * (fe.head<3>() - pos_world[i].cross(fe.tail<3>()));
      f[i] -= fl;
    }
  }
  VecX tau(tree.num_dofs());
  for (int i = n - 1; i >= 0; --i) {
    const Link& l = tree.links[i];
    tau[l.dof] = motion_subspace(l).dot(f[i]);
    if (l.parent >= 0) f[l.parent] += x_up[i].transpose() * f[i];
  }
  return tau;
}

// C(q, dq) + g(q).
inline VecX bias_forces(const KinematicTree& tree, const Eigen::Ref<const VecX>& q,
                        const Eigen::Ref<const VecX>& dq,
                        const Vec3& gravity = Vec3(0.0, 0.0, -kGravity)) {
  return inverse_dynamics(tree, q, dq, VecX::Zero(tree.num_dofs()), gravity);
}

inline VecX gravity_forces(const KinematicTree& tree, const Eigen::Ref<const VecX>& q,
                           const Vec3& gravity = Vec3(0.0, 0.0, -kGravity)) {
  const VecX zero = VecX::Zero(tree.num_dofs());
  return inverse_dynamics(tree, q, zero, zero, gravity);
}

// Composite-rigid-body algorithm.
inline MatX mass_matrix(const KinematicTree& tree, const Eigen::Ref<const VecX>& q) {
  const int n = tree.num_links();
  std::vector<Mat6> x_up(n), ic(n);
  for (int i = 0; i < n; ++i) {
    const Link& l = tree.links[i];
    Mat3 r;
    Vec3 p;
    joint_pose(l, q[l.dof], &r, &p);
    x_up[i] = motion_transform(r, p);
    ic[i] = link_spatial_inertia(l);
  }
  for (int i = n - 1; i >= 0; --i) {
    const int parent = tree.links[i].parent;
    if (parent >= 0) ic[parent] += x_up[i].transpose() * ic[i] * x_up[i];
  }
  MatX m = MatX::Zero(tree.num_dofs(), tree.num_dofs());
  for (int i = 0; i < n; ++i) {
    const Link& li = tree.links[i];
    Vec6 f = ic[i] * motion_subspace(li);
    m(li.dof, li.dof) = motion_subspace(li).dot(f);
    int j = i;
    while (tree.links[j].parent >= 0) {
      f = x_up[j].transpose() * f;
      j = tree.links[j].parent;
      const Link& lj = tree.links[j];
      m(li.dof, lj.dof) = motion_subspace(lj).dot(f);
      m(lj.dof, li.dof) = m(li.dof, lj.dof);
    }
  }
  return m;
}

inline VecX forward_dynamics(const KinematicTree& tree, const Eigen::Ref<const VecX>& q,
                             const Eigen::Ref<const VecX>& dq,
                             const Eigen::Ref<const VecX>& tau,
                             const Vec3& gravity = Vec3(0.0, 0.0, -kGravity)) {
  const MatX m = mass_matrix(tree, q);
  return m.llt().solve(tau - bias_forces(tree, q, dq, gravity));
}

// Energy and momentum --------------------------------------------------------

inline double kinetic_energy(const KinematicTree& tree, const Eigen::Ref<const VecX>& q,
                             const Eigen::Ref<const VecX>& dq) {
  return 0.5 * dq.dot(mass_matrix(tree, q) * dq);
}

inline double potential_energy(const KinematicTree& tree, const TreeKinematics& k,
                               const Vec3& gravity = Vec3(0.0, 0.0, -kGravity)) {
  double e = 0.0;
  for (int i = 0; i < tree.num_links(); ++i) {
    const Link& l = tree.links[i];
    if (l.mass <= 0.0) continue;
    e -= l.mass * gravity.dot(point_position(k, i, l.com));
  }
  return e;
}

inline Vec3 center_of_mass(const KinematicTree& tree, const TreeKinematics& k) {
  Vec3 c = Vec3::Zero();
  double m = 0.0;
  for (int i = 0; i < tree.num_links(); ++i) {
    const Link& l = tree.links[i];
    c += l.mass * point_position(k, i, l.com);
    m += l.mass;
  }
  return m > 0.0 ? Vec3(c / m) : c;
}

inline Vec3 linear_momentum(const KinematicTree& tree, const TreeKinematics& k) {
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < tree.num_links(); ++i) {
    const Link& l = tree.links[i];
    if (l.mass <= 0.0) continue;
    p += l.mass * point_velocity(k, i, l.com).tail<3>();
  }
  return p;
}

}  // namespace mcmpc

#endif  // MCMPC_KINEMATIC_TREE_HPP_
