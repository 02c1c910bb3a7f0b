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

// Robot and object physical parameters, the model file loader, and the
// combined-rigid-body (trunk + carried object) mass properties.

#ifndef MCMPC_ROBOT_MODEL_HPP_
#define MCMPC_ROBOT_MODEL_HPP_

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mcmpc/common.hpp"
#include "mcmpc/json_util.hpp"
#include "mcmpc/kinematic_tree.hpp"

namespace mcmpc {

struct FootGeometry {
  std::string link;
  Vec3 sole = Vec3::Zero();  // sole point below the ankle, link frame
  double toe = 0.1;          // sole-to-toe length along link x
  double heel = 0.05;        // sole-to-heel length
  double half_width = 0.02;

  // Corner contact points in link coordinates (toe/heel x inner/outer).
  std::array<Vec3, 4> corners() const {
    return {sole + Vec3(toe, half_width, 0.0), sole + Vec3(toe, -half_width, 0.0),
            sole + Vec3(-heel, half_width, 0.0), sole + Vec3(-heel, -half_width, 0.0)};
  }
};

struct HandFrame {
  std::string link;
  Vec3 point = Vec3::Zero();
};

struct BodyParams {
  double upper_body_mass = 17.0;                // m_ub
  Mat3 upper_body_inertia = Mat3::Identity();   // body frame, about the CoM
  std::array<Vec3, 2> hip_offsets{};            // trunk frame
  std::array<Vec3, 2> shoulder_offsets{};       // trunk frame
  std::array<FootGeometry, 2> feet{};
  std::array<HandFrame, 2> hands{};
};

enum class ObjectShape { kBox, kSphere };

struct ObjectParams {
  double mass = 0.0;                   // m_o
  Mat3 inertia = Mat3::Zero();         // about the object CoM
  Vec3 com_offset = Vec3::Zero();      // CoM relative to the grasp frame
  ObjectShape shape = ObjectShape::kBox;
  Vec3 size = Vec3::Zero();            // box edge lengths, or (r, r, r)

  // Support clearance below the CoM when resting on a surface.
  double bottom_offset() const {
    return shape == ObjectShape::kSphere ? size.x() : 0.5 * size.z();
  }

  static ObjectParams box(double mass, const Vec3& size) {
    ObjectParams o;
    o.mass = mass;
    o.shape = ObjectShape::kBox;
    o.size = size;
    o.inertia = Mat3::Zero();
    o.inertia(0, 0) = mass * (size.y() * size.y() + size.z() * size.z()) / 12.0;
    o.inertia(1, 1) = mass * (size.x() * size.x() + size.z() * size.z()) / 12.0;
    o.inertia(2, 2) = mass * (size.x() * size.x() + size.y() * size.y()) / 12.0;
    return o;
  }

  static ObjectParams sphere(double mass, double radius) {
    ObjectParams o;
    o.mass = mass;
    o.shape = ObjectShape::kSphere;
    o.size = Vec3::Constant(radius);
    o.inertia = Mat3::Identity() * (0.4 * mass * radius * radius);
    return o;
  }
};

struct ActuatorLimits {
  VecX torque_max;    // N m, one per actuated joint
  VecX velocity_max;  // rad/s
};

struct RobotModel {
  std::string name;
  BodyParams body;
  KinematicTree tree;
  ActuatorLimits limits;
  std::vector<std::string> actuated_joints;  // in coordinate order

  int num_dofs() const { return tree.num_dofs(); }
  int num_actuated() const { return static_cast<int>(actuated_joints.size()); }
  int base_dofs() const { return tree.floating_base ? 6 : 0; }
};

// Combined CoM of the trunk (p_c, m_ub) and the object (p_o, m_o).
inline Vec3 combined_com(const Vec3& p_c, double m_ub, const Vec3& p_o, double m_o) {
  const double m = m_ub + m_o;
  if (!(m > 0.0)) throw ModelError("combined_com: total mass must be positive");
  return (p_c * m_ub + p_o * m_o) / m;
}

// Parallel-axis shift of a CoM inertia to a point displaced by d.
inline Mat3 parallel_axis(const Mat3& inertia_com, double mass, const Vec3& d) {
  return inertia_com + mass * (d.squaredNorm() * Mat3::Identity() - d * d.transpose());
}

// Rotational inertia of trunk + object about their combined CoM.
inline Mat3 combined_inertia(const Mat3& i_ub, double m_ub, const Vec3& p_c,
                             const Mat3& i_o, double m_o, const Vec3& p_o) {
  const Vec3 p_h = combined_com(p_c, m_ub, p_o, m_o);
  if (m_o == 0.0) return parallel_axis(i_ub, m_ub, p_c - p_h);  // no object
  return parallel_axis(i_ub, m_ub, p_c - p_h) + parallel_axis(i_o, m_o, p_o - p_h);
}

namespace detail {

inline Link parse_link(const json_util::Json& j, const std::string& ctx) {
  using namespace json_util;
  require_keys_in(j, {"name", "parent", "joint", "mass", "com", "inertia"}, ctx);
  Link l;
  l.name = required(j, "name", ctx).get<std::string>();
  const std::string c = ctx + " '" + l.name + "'";
  l.mass = number(required(j, "mass", c), c + ".mass");
  if (!(l.mass > 0.0)) throw ModelError(c + ": non-positive mass");
  if (j.contains("com")) l.com = vec3(j.at("com"), c + ".com");
  if (j.contains("inertia")) l.inertia = inertia(j.at("inertia"), c + ".inertia");
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(l.inertia);
  if (eig.eigenvalues().minCoeff() < -1e-12) {
    throw ModelError(c + ": inertia is not positive semidefinite");
  }
  if (j.contains("joint")) {
    const Json& jj = j.at("joint");
    require_keys_in(jj, {"type", "axis", "origin", "rpy"}, c + ".joint");
    const std::string type = required(jj, "type", c + ".joint").get<std::string>();
    if (type == "revolute") {
      l.joint = JointType::kRevolute;
    } else if (type == "prismatic") {
      l.joint = JointType::kPrismatic;
    } else {
      throw ModelError(c + ": unsupported joint type '" + type + "'");
    }
    l.axis = vec3(required(jj, "axis", c + ".joint"), c + ".joint.axis");
    if (l.axis.norm() < 1e-12) throw ModelError(c + ": zero joint axis");
    l.axis.normalize();
    if (jj.contains("origin")) l.origin = vec3(jj.at("origin"), c + ".joint.origin");
    if (jj.contains("rpy")) {
      const Vec3 rpy = vec3(jj.at("rpy"), c + ".joint.rpy");
      l.origin_rotation = rotation_from_euler(EulerAngles::from_vector(rpy));
    }
  }
  return l;
}

// Orders links so that every parent precedes its children. Throws on
// cycles, self-parenting, missing parents and multiple roots.
inline std::vector<Link> topological_order(std::vector<Link> links,
                                           const std::vector<std::string>& parents) {
  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(links.size()); ++i) {
    if (!index.emplace(links[i].name, i).second) {
      throw ModelError("duplicate link '" + links[i].name + "'");
    }
  }
  std::vector<int> parent(links.size(), -1);
  int roots = 0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (parents[i].empty()) {
      ++roots;
      continue;
    }
    if (parents[i] == links[i].name) {
      throw ModelError("cycle: link '" + links[i].name + "' is its own parent");
    }
    const auto it = index.find(parents[i]);
    if (it == index.end()) {
      throw ModelError("missing link '" + parents[i] + "' (parent of '" + links[i].name + "')");
    }
    parent[i] = it->second;
  }
  if (roots != 1) throw ModelError("model must have exactly one root link");
  // Cycle check: walking up from any link must terminate.
  for (std::size_t i = 0; i < links.size(); ++i) {
    int steps = 0;
    for (int j = static_cast<int>(i); j >= 0; j = parent[j]) {
      if (++steps > static_cast<int>(links.size())) {
        throw ModelError("cycle detected through link '" + links[i].name + "'");
      }
    }
  }
  std::vector<Link> ordered;
  std::vector<int> new_index(links.size(), -1);
  std::vector<bool> placed(links.size(), false);
  while (ordered.size() < links.size()) {
    for (std::size_t i = 0; i < links.size(); ++i) {
      if (placed[i]) continue;
      if (parent[i] >= 0 && !placed[parent[i]]) continue;
      Link l = links[i];
      l.parent = parent[i] >= 0 ? new_index[parent[i]] : -1;
      new_index[i] = static_cast<int>(ordered.size());
      placed[i] = true;
      ordered.push_back(l);
    }
  }
  return ordered;
}

}  // namespace detail

inline RobotModel parse_model(const json_util::Json& j, const std::string& source = "model") {
  using namespace json_util;
  require_keys_in(j, {"schema", "name", "floating_base", "links", "body", "feet", "hands",
                      "limits", "description"},
                  source);
  if (j.contains("schema") && j.at("schema").get<int>() != 1) {
    throw ConfigError(source + ": unsupported schema version");
  }
  RobotModel model;
  model.name = j.value("name", std::string("robot"));
  const bool floating = j.value("floating_base", false);

  const Json& jlinks = required(j, "links", source);
  if (!jlinks.is_array() || jlinks.empty()) throw ModelError(source + ": no links");
  std::vector<Link> links;
  std::vector<std::string> parents;
  for (std::size_t i = 0; i < jlinks.size(); ++i) {
    const std::string ctx = source + ".links[" + std::to_string(i) + "]";
    links.push_back(detail::parse_link(jlinks[i], ctx));
    const Json& p = jlinks[i].contains("parent") ? jlinks[i].at("parent") : Json();
    parents.push_back(p.is_null() ? std::string() : p.get<std::string>());
    if (!p.is_null() && !jlinks[i].contains("joint")) {
      throw ModelError(ctx + ": non-root link needs a joint");
    }
    if (p.is_null() && !floating && !jlinks[i].contains("joint")) {
      throw ModelError(ctx + ": fixed-base root link needs a joint");
    }
  }
  KinematicTree fixed;
  fixed.links = detail::topological_order(std::move(links), parents);
  for (int i = 0; i < fixed.num_links(); ++i) fixed.links[i].dof = i;
  model.tree = floating ? with_floating_base(fixed) : fixed;

  for (int d = model.base_dofs(); d < model.tree.num_dofs(); ++d) {
    model.actuated_joints.push_back(model.tree.links[model.tree.link_of_dof(d)].name);
  }

  // Actuator limits.
  const int na = model.num_actuated();
  model.limits.torque_max = VecX::Constant(na, 33.5);
  model.limits.velocity_max = VecX::Constant(na, 21.0);
  if (j.contains("limits")) {
    const Json& jl = j.at("limits");
    require_keys_in(jl, {"torque", "velocity", "overrides"}, source + ".limits");
    model.limits.torque_max.setConstant(number_or(jl, "torque", 33.5, source + ".limits"));
    model.limits.velocity_max.setConstant(number_or(jl, "velocity", 21.0, source + ".limits"));
    if (jl.contains("overrides")) {
      for (const auto& [name, o] : jl.at("overrides").items()) {
        const auto it = std::find(model.actuated_joints.begin(), model.actuated_joints.end(), name);
        if (it == model.actuated_joints.end()) {
          throw ModelError(source + ".limits: unknown joint '" + name + "'");
        }
        const auto idx = static_cast<Eigen::Index>(it - model.actuated_joints.begin());
        require_keys_in(o, {"torque", "velocity"}, source + ".limits.overrides." + name);
        model.limits.torque_max[idx] = number_or(o, "torque", model.limits.torque_max[idx], name);
        model.limits.velocity_max[idx] =
            number_or(o, "velocity", model.limits.velocity_max[idx], name);
      }
    }
  }
  if (na > 0 && (model.limits.torque_max.minCoeff() <= 0.0 ||
                 model.limits.velocity_max.minCoeff() <= 0.0)) {
    throw ModelError(source + ": actuator limits must be strictly positive");
  }

  // Body parameters.
  BodyParams& body = model.body;
  body.upper_body_mass = model.tree.total_mass();
  if (j.contains("body")) {
    const Json& jb = j.at("body");
    const std::string c = source + ".body";
    require_keys_in(jb, {"upper_body_mass", "upper_body_inertia", "hip_offsets",
                         "shoulder_offsets"},
                    c);
    body.upper_body_mass = number_or(jb, "upper_body_mass", body.upper_body_mass, c);
    if (jb.contains("upper_body_inertia")) {
      body.upper_body_inertia = inertia(jb.at("upper_body_inertia"), c + ".upper_body_inertia");
    }
    for (const char* key : {"hip_offsets", "shoulder_offsets"}) {
      if (!jb.contains(key)) continue;
      const Json& a = jb.at(key);
      if (!a.is_array() || a.size() != 2) throw ConfigError(c + "." + key + ": need 2 entries");
      auto& dst = std::string(key) == "hip_offsets" ? body.hip_offsets : body.shoulder_offsets;
      dst[0] = vec3(a[0], c + "." + key);
      dst[1] = vec3(a[1], c + "." + key);
    }
  }
  if (!(body.upper_body_mass > 0.0)) throw ModelError(source + ": non-positive upper-body mass");
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(body.upper_body_inertia);
  if (!body.upper_body_inertia.isApprox(body.upper_body_inertia.transpose()) ||
      eig.eigenvalues().minCoeff() <= 0.0) {
    throw ModelError(source + ": upper-body inertia must be symmetric positive-definite");
  }
  if (j.contains("feet")) {
    const Json& jf = j.at("feet");
    if (!jf.is_array() || jf.size() != 2) throw ConfigError(source + ".feet: need 2 entries");
    for (int n = 0; n < 2; ++n) {
      const std::string c = source + ".feet[" + std::to_string(n) + "]";
      require_keys_in(jf[n], {"link", "sole", "toe", "heel", "half_width"}, c);
      FootGeometry& f = body.feet[n];
      f.link = required(jf[n], "link", c).get<std::string>();
      model.tree.find_link(f.link);
      f.sole = vec3(required(jf[n], "sole", c), c + ".sole");
      f.toe = number_or(jf[n], "toe", f.toe, c);
      f.heel = number_or(jf[n], "heel", f.heel, c);
      f.half_width = number_or(jf[n], "half_width", f.half_width, c);
    }
  }
  if (j.contains("hands")) {
    const Json& jh = j.at("hands");
    if (!jh.is_array() || jh.size() != 2) throw ConfigError(source + ".hands: need 2 entries");
    for (int n = 0; n < 2; ++n) {
      const std::string c = source + ".hands[" + std::to_string(n) + "]";
      require_keys_in(jh[n], {"link", "point"}, c);
      body.hands[n].link = required(jh[n], "link", c).get<std::string>();
      model.tree.find_link(body.hands[n].link);
      body.hands[n].point = vec3(required(jh[n], "point", c), c + ".point");
    }
  }
  return model;
}

inline RobotModel load_model(const std::filesystem::path& path) {
  return parse_model(json_util::parse_file(path), path.filename().string());
}

// Crouched stance: ankle and hip pitch at -knee/2 keep the soles flat, base
// height puts the lower sole at z = 0. Arms hang straight.
inline VecX standing_pose(const RobotModel& model, double knee = 1.0) {
  const KinematicTree& tree = model.tree;
  VecX q = VecX::Zero(tree.num_dofs());
  for (const FootGeometry& foot : model.body.feet) {
    const int ankle = tree.find_link(foot.link);
    const int shank = tree.links[ankle].parent;
    const int thigh = shank >= 0 ? tree.links[shank].parent : -1;
    if (thigh < 0 || tree.links[thigh].virtual_base) {
      throw ModelError("standing_pose: foot '" + foot.link + "' lacks a hip-knee-ankle chain");
    }
    q[tree.links[thigh].dof] = -0.5 * knee;
    q[tree.links[shank].dof] = knee;
    q[tree.links[ankle].dof] = -0.5 * knee;
  }
  if (tree.floating_base) {
    const TreeKinematics k = forward_kinematics(tree, q);
    double lowest = kInf;
    for (const FootGeometry& foot : model.body.feet) {
      lowest = std::min(lowest, point_position(k, tree.find_link(foot.link), foot.sole).z());
    }
    q[2] = -lowest;
  }
  return q;
}

inline std::filesystem::path data_path(const std::string& relative) {
#ifdef MCMPC_DATA_DIR
  return std::filesystem::path(MCMPC_DATA_DIR) / relative;
#else
  return std::filesystem::path(relative);
#endif
}

}  // namespace mcmpc

#endif  // MCMPC_ROBOT_MODEL_HPP_
