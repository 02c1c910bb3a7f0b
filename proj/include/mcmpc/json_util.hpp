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

#ifndef MCMPC_JSON_UTIL_HPP_
#define MCMPC_JSON_UTIL_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mcmpc/common.hpp"

namespace mcmpc::json_util {

using Json = nlohmann::json;

inline Json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

// Rejects keys that are not in `allowed`.
inline void require_keys_in(const Json& j, std::initializer_list<const char*> allowed,
                            const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

inline const Json& required(const Json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw ConfigError(context + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const std::string& context) {
  if (!j.is_number()) throw ConfigError(context + ": expected a number");
  return j.get<double>();
}

inline double number_or(const Json& j, const char* key, double fallback,
                        const std::string& context) {
  return j.contains(key) ? number(j.at(key), context + "." + key) : fallback;
}

inline Vec3 vec3(const Json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(context + ": expected an array of 3 numbers");
  }
  return {number(j[0], context), number(j[1], context), number(j[2], context)};
}

inline VecX vector(const Json& j, const std::string& context) {
  if (!j.is_array()) throw ConfigError(context + ": expected an array");
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = number(j[i], context);
  }
  return v;
}

// Inertia as [ixx, iyy, izz] or [ixx, iyy, izz, ixy, ixz, iyz].
inline Mat3 inertia(const Json& j, const std::string& context) {
  const VecX v = vector(j, context);
  if (v.size() != 3 && v.size() != 6) {
    throw ConfigError(context + ": inertia needs 3 or 6 entries");
  }
  Mat3 m = Mat3::Zero();
  m.diagonal() = v.head<3>();
  if (v.size() == 6) {
    m(0, 1) = m(1, 0) = v[3];
    m(0, 2) = m(2, 0) = v[4];
    m(1, 2) = m(2, 1) = v[5];
  }
  return m;
}

inline Json to_json(const Eigen::Ref<const VecX>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace mcmpc::json_util

#endif  // MCMPC_JSON_UTIL_HPP_
