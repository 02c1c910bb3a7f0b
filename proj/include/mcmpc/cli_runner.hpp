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

// Scenario files, end-to-end runs, CSV traces, reports, model comparison
// and the load-capacity sweep.

#ifndef MCMPC_CLI_RUNNER_HPP_
#define MCMPC_CLI_RUNNER_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mcmpc/closed_loop.hpp"
#include "mcmpc/json_util.hpp"

namespace mcmpc {

inline constexpr int kScenarioSchema = 1;

// A bound on one report metric.
struct Check {
  std::string metric;
  std::optional<double> min;
  std::optional<double> max;
};

struct SweepSpec {
  std::vector<double> masses;
  double max_pitch = 0.2;       // rad
  double max_com_error = 0.05;  // m
  std::vector<Check> checks;    // on max_stable_mass and monotone
};

struct Scenario {
  std::string name;
  std::string description;
  std::filesystem::path model_file;
  DynamicsModel variant = DynamicsModel::kModel2;
  double duration = 0.0;
  std::uint64_t seed = 0;
  ObjectParams object;
  Vec3 object_initial = Vec3::Zero();
  bool object_in_trunk_frame = false;  // initial position relative to the trunk
  bool object_on_fixture = false;
  ControllerConfig controller;
  std::vector<Segment> segments;
  std::vector<Event> events;
  std::vector<Check> checks;
  std::optional<SweepSpec> sweep;

  void validate() const {
    if (!std::filesystem::exists(model_file)) {
      throw ConfigError("scenario '" + name + "': model file '" + model_file.string() +
                        "' does not exist");
    }
    if (!(duration >= 0.0)) throw ConfigError("scenario '" + name + "': negative duration");
    if (segments.empty()) throw ConfigError("scenario '" + name + "': no segments");
    if (std::abs(segments.front().start) > kTimeEpsilon) {
      throw ConfigError("scenario '" + name + "': first segment must start at 0");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].start > duration + kTimeEpsilon) {
        throw ConfigError("scenario '" + name + "': segment '" + segments[i].label +
                          "' starts after the end of the run");
      }
      if (i > 0 && !(segments[i].start > segments[i - 1].start)) {
        throw ConfigError("scenario '" + name + "': segment starts must increase");
      }
    }
    for (const Event& e : events) {
      if (e.time < 0.0 || e.time > duration + kTimeEpsilon) {
        throw ConfigError("scenario '" + name + "': event outside the run");
      }
    }
    if (sweep) {
      if (sweep->masses.empty()) throw ConfigError("sweep: empty mass grid");
      for (std::size_t i = 1; i < sweep->masses.size(); ++i) {
        if (!(sweep->masses[i] > sweep->masses[i - 1])) {
          throw ConfigError("sweep: mass grid must be strictly increasing");
        }
      }
      if (sweep->masses.front() < 0.0) throw ConfigError("sweep: negative mass");
    }
    controller.validate();
  }
};

namespace detail {

using json_util::Json;

inline bool boolean(const Json& j, const std::string& ctx) {
  if (!j.is_boolean()) throw ConfigError(ctx + ": expected true or false");
  return j.get<bool>();
}

inline std::string text(const Json& j, const std::string& ctx) {
  if (!j.is_string()) throw ConfigError(ctx + ": expected a string");
  return j.get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> fixed_vector(const Json& j, const std::string& ctx) {
  const VecX v = json_util::vector(j, ctx);
  if (v.size() != N) throw ConfigError(ctx + ": expected " + std::to_string(N) + " numbers");
  return v;
}

inline DynamicsModel variant(const Json& j, const std::string& ctx) {
  const double v = json_util::number(j, ctx);
  if (v == 1.0) return DynamicsModel::kModel1;
  if (v == 2.0) return DynamicsModel::kModel2;
  throw ConfigError(ctx + ": model variant must be 1 or 2");
}

inline void parse_object(const Json& j, Scenario* s) {
  const std::string ctx = "object";
  json_util::require_keys_in(j, {"shape", "mass", "size", "initial", "frame", "on_fixture"},
                             ctx);
  const std::string shape = text(json_util::required(j, "shape", ctx), ctx + ".shape");
  const double mass = json_util::number(json_util::required(j, "mass", ctx), ctx + ".mass");
  if (mass < 0.0) throw ConfigError(ctx + ": negative mass");
  if (shape == "box") {
    s->object = ObjectParams::box(mass, json_util::vec3(json_util::required(j, "size", ctx),
                                                        ctx + ".size"));
  } else if (shape == "sphere") {
    const Json& r = json_util::required(j, "size", ctx);
    s->object = ObjectParams::sphere(mass, json_util::number(r, ctx + ".size (radius)"));
  } else {
    throw ConfigError(ctx + ": unknown shape '" + shape + "'");
  }
  if (j.contains("initial")) s->object_initial = json_util::vec3(j["initial"], ctx + ".initial");
  if (j.contains("frame")) {
    const std::string f = text(j["frame"], ctx + ".frame");
    if (f != "world" && f != "trunk") throw ConfigError(ctx + ": frame must be world or trunk");
    s->object_in_trunk_frame = f == "trunk";
  }
  if (j.contains("on_fixture")) s->object_on_fixture = boolean(j["on_fixture"], ctx);
}

inline Segment parse_segment(const Json& j, std::size_t index) {
  const std::string ctx = "segments[" + std::to_string(index) + "]";
  json_util::require_keys_in(j,
                             {"label", "start", "walk", "object", "hands", "hand_blend", "vx",
                              "vy", "yaw_rate", "height", "roll", "pitch"},
                             ctx);
  Segment s;
  s.label = j.contains("label") ? text(j["label"], ctx + ".label") : ctx;
  s.start = json_util::number(json_util::required(j, "start", ctx), ctx + ".start");
  if (j.contains("walk")) s.walk = boolean(j["walk"], ctx + ".walk");
  if (j.contains("object")) s.object = boolean(j["object"], ctx + ".object");
  if (j.contains("hands")) {
    const Json& h = j["hands"];
    if (!h.is_array() || h.size() != 2) throw ConfigError(ctx + ".hands: expected two targets");
    s.hands = std::array<Vec3, 2>{json_util::vec3(h[0], ctx + ".hands[0]"),
                                  json_util::vec3(h[1], ctx + ".hands[1]")};
  }
  s.hand_blend = json_util::number_or(j, "hand_blend", s.hand_blend, ctx);
  if (s.hand_blend < 0.0) throw ConfigError(ctx + ": negative hand_blend");
  s.command.vx = json_util::number_or(j, "vx", 0.0, ctx);
  s.command.vy = json_util::number_or(j, "vy", 0.0, ctx);
  s.command.yaw_rate = json_util::number_or(j, "yaw_rate", 0.0, ctx);
  s.command.roll = json_util::number_or(j, "roll", 0.0, ctx);
  s.command.pitch = json_util::number_or(j, "pitch", 0.0, ctx);
  if (j.contains("height")) s.height = json_util::number(j["height"], ctx + ".height");
  return s;
}

inline Event parse_event(const Json& j, std::size_t index) {
  const std::string ctx = "events[" + std::to_string(index) + "]";
  json_util::require_keys_in(j, {"time", "kind", "target"}, ctx);
  Event e;
  e.time = json_util::number(json_util::required(j, "time", ctx), ctx + ".time");
  const std::string kind = text(json_util::required(j, "kind", ctx), ctx + ".kind");
  if (kind == "attach") {
    e.kind = EventKind::kAttach;
  } else if (kind == "detach") {
    e.kind = EventKind::kDetach;
  } else {
    throw ConfigError(ctx + ": kind must be attach or detach");
  }
  if (j.contains("target")) e.target = json_util::vec3(j["target"], ctx + ".target");
  return e;
}

inline Check parse_check(const Json& j, std::size_t index) {
  const std::string ctx = "checks[" + std::to_string(index) + "]";
  json_util::require_keys_in(j, {"metric", "min", "max"}, ctx);
  Check c;
  c.metric = text(json_util::required(j, "metric", ctx), ctx + ".metric");
  if (j.contains("min")) c.min = json_util::number(j["min"], ctx + ".min");
  if (j.contains("max")) c.max = json_util::number(j["max"], ctx + ".max");
  if (!c.min && !c.max) throw ConfigError(ctx + ": needs min or max");
  return c;
}

inline void parse_mpc(const Json& j, MpcConfig* m) {
  const std::string ctx = "mpc";
  json_util::require_keys_in(j, {"dt", "horizon", "mu", "f_min", "f_max", "q_weights",
                                 "r_weights"},
                             ctx);
  m->dt = json_util::number_or(j, "dt", m->dt, ctx);
  if (j.contains("horizon")) {
    const double h = json_util::number(j["horizon"], ctx + ".horizon");
    if (h != std::floor(h)) throw ConfigError(ctx + ".horizon: expected an integer");
    m->horizon = static_cast<int>(h);
  }
  m->mu = json_util::number_or(j, "mu", m->mu, ctx);
  m->f_min = json_util::number_or(j, "f_min", m->f_min, ctx);
  m->f_max = json_util::number_or(j, "f_max", m->f_max, ctx);
  if (j.contains("q_weights")) m->q_weights = fixed_vector<srbd::kStateDim>(j["q_weights"], ctx);
  if (j.contains("r_weights")) m->r_weights = fixed_vector<srbd::kInputDim>(j["r_weights"], ctx);
}

inline void parse_wbc(const Json& j, WbcConfig* w) {
  const std::string ctx = "wbc";
  json_util::require_keys_in(j, {"kp", "kd", "mu", "f_max", "h_base", "h_joint", "k_force",
                                 "k_moment", "enforce_torque_limits", "enforce_cop"},
                             ctx);
  if (j.contains("kp")) w->kp = fixed_vector<6>(j["kp"], ctx + ".kp");
  if (j.contains("kd")) w->kd = fixed_vector<6>(j["kd"], ctx + ".kd");
  w->mu = json_util::number_or(j, "mu", w->mu, ctx);
  w->f_max = json_util::number_or(j, "f_max", w->f_max, ctx);
  w->h_base = json_util::number_or(j, "h_base", w->h_base, ctx);
  w->h_joint = json_util::number_or(j, "h_joint", w->h_joint, ctx);
  w->k_force = json_util::number_or(j, "k_force", w->k_force, ctx);
  w->k_moment = json_util::number_or(j, "k_moment", w->k_moment, ctx);
  if (j.contains("enforce_torque_limits")) {
    w->enforce_torque_limits = boolean(j["enforce_torque_limits"], ctx);
  }
  if (j.contains("enforce_cop")) w->enforce_cop = boolean(j["enforce_cop"], ctx);
}

}  // namespace detail

// Parses a scenario document. Relative model paths resolve against base_dir,
// then against the data directory.
inline Scenario parse_scenario(const json_util::Json& j, const std::filesystem::path& base_dir) {
  using namespace detail;
  json_util::require_keys_in(j,
                             {"schema", "name", "description", "model_file", "variant",
                              "duration", "seed", "object", "gait", "segments", "events",
                              "checks", "mpc", "wbc", "sweep"},
                             "scenario");
  const double schema = json_util::number(json_util::required(j, "schema", "scenario"), "schema");
  if (schema != kScenarioSchema) {
    throw ConfigError("scenario: unsupported schema " + json_util::Json(schema).dump());
  }
  Scenario s;
  s.name = text(json_util::required(j, "name", "scenario"), "name");
  if (j.contains("description")) s.description = text(j["description"], "description");
  const std::string model =
      j.contains("model_file") ? text(j["model_file"], "model_file") : "models/humanoid.json";
  s.model_file = base_dir / model;
  if (!std::filesystem::exists(s.model_file)) s.model_file = data_path(model);
  if (j.contains("variant")) s.variant = variant(j["variant"], "variant");
  s.duration = json_util::number(json_util::required(j, "duration", "scenario"), "duration");
  if (j.contains("seed")) {
    const double seed = json_util::number(j["seed"], "seed");
    if (seed < 0.0 || seed != std::floor(seed)) throw ConfigError("seed: expected an integer");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  if (j.contains("object")) parse_object(j["object"], &s);
  if (j.contains("gait")) {
    json_util::require_keys_in(j["gait"], {"period", "overlap"}, "gait");
    s.controller.gait_period = json_util::number_or(j["gait"], "period", 0.4, "gait");
    s.controller.gait_overlap = json_util::number_or(j["gait"], "overlap", 0.0, "gait");
  }
  const json_util::Json& segs = json_util::required(j, "segments", "scenario");
  if (!segs.is_array()) throw ConfigError("segments: expected an array");
  for (std::size_t i = 0; i < segs.size(); ++i) s.segments.push_back(parse_segment(segs[i], i));
  if (j.contains("events")) {
    if (!j["events"].is_array()) throw ConfigError("events: expected an array");
    for (std::size_t i = 0; i < j["events"].size(); ++i) {
      s.events.push_back(parse_event(j["events"][i], i));
    }
  }
  if (j.contains("checks")) {
    if (!j["checks"].is_array()) throw ConfigError("checks: expected an array");
    for (std::size_t i = 0; i < j["checks"].size(); ++i) {
      s.checks.push_back(parse_check(j["checks"][i], i));
    }
  }
  if (j.contains("mpc")) parse_mpc(j["mpc"], &s.controller.mpc);
  if (j.contains("wbc")) parse_wbc(j["wbc"], &s.controller.wbc);
  if (j.contains("sweep")) {
    const json_util::Json& w = j["sweep"];
    json_util::require_keys_in(w, {"masses", "max_pitch", "max_com_error", "checks"}, "sweep");
    SweepSpec sw;
    const VecX m = json_util::vector(json_util::required(w, "masses", "sweep"), "sweep.masses");
    sw.masses.assign(m.data(), m.data() + m.size());
    sw.max_pitch = json_util::number_or(w, "max_pitch", sw.max_pitch, "sweep");
    sw.max_com_error = json_util::number_or(w, "max_com_error", sw.max_com_error, "sweep");
    if (w.contains("checks")) {
      if (!w["checks"].is_array()) throw ConfigError("sweep.checks: expected an array");
      for (std::size_t i = 0; i < w["checks"].size(); ++i) {
        sw.checks.push_back(parse_check(w["checks"][i], i));
      }
    }
    s.sweep = sw;
  }
  s.controller.model = s.variant;
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  try {
    return parse_scenario(json_util::parse_file(path), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.filename().string() + ": " + e.what());
  }
}

// Bundled scenario files, sorted by name.
inline std::vector<std::filesystem::path> list_scenarios(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct CheckResult {
  Check check;
  double value = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  std::string note;
};

struct RunReport {
  std::string scenario;
  int variant = 2;
  std::uint64_t seed = 0;
  double duration = 0.0;
  double final_time = 0.0;
  bool completed = true;
  std::string failure;           // named cause when not completed
  std::map<std::string, double> metrics;
  std::vector<std::string> joint_names;
  std::vector<double> max_tau;   // per actuated joint
  std::vector<CheckResult> checks;

  bool passed() const {
    if (!completed) return false;
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }

  json_util::Json to_json() const {
    json_util::Json j;
    j["scenario"] = scenario;
    j["variant"] = variant;
    j["seed"] = seed;
    j["duration"] = duration;
    j["final_time"] = final_time;
    j["completed"] = completed;
    j["failure"] = failure;
    j["metrics"] = json_util::Json::object();
    for (const auto& [k, v] : metrics) j["metrics"][k] = v;
    j["max_tau"] = json_util::Json::object();
    for (std::size_t i = 0; i < max_tau.size(); ++i) j["max_tau"][joint_names[i]] = max_tau[i];
    j["checks"] = json_util::Json::array();
    for (const CheckResult& c : checks) {
      json_util::Json cj;
      cj["metric"] = c.check.metric;
      if (c.check.min) cj["min"] = *c.check.min;
      if (c.check.max) cj["max"] = *c.check.max;
      cj["value"] = std::isfinite(c.value) ? json_util::Json(c.value) : json_util::Json();
      cj["pass"] = c.pass;
      if (!c.note.empty()) cj["note"] = c.note;
      j["checks"].push_back(cj);
    }
    j["passed"] = passed();
    return j;
  }

  static RunReport from_json(const json_util::Json& j) {
    RunReport r;
    try {
      r.scenario = j.at("scenario").get<std::string>();
      r.variant = j.at("variant").get<int>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.duration = j.at("duration").get<double>();
      r.final_time = j.at("final_time").get<double>();
      r.completed = j.at("completed").get<bool>();
      r.failure = j.at("failure").get<std::string>();
      for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
      for (const auto& [k, v] : j.at("max_tau").items()) {
        r.joint_names.push_back(k);
        r.max_tau.push_back(v.get<double>());
      }
    } catch (const json_util::Json::exception& e) {
      throw ConfigError(std::string("report: ") + e.what());
    }
    return r;
  }

  std::string table() const {
    std::ostringstream o;
    char buf[160];
    o << "scenario " << scenario << " (model " << variant << ", seed " << seed << ")\n";
    std::snprintf(buf, sizeof(buf), "  ran %.3f of %.3f s%s%s\n", final_time, duration,
                  completed ? "" : ", stopped: ", failure.c_str());
    o << buf;
    for (const auto& [k, v] : metrics) {
      std::snprintf(buf, sizeof(buf), "  %-28s %14.6g\n", k.c_str(), v);
      o << buf;
    }
    o << "  max |tau| per joint:\n";
    for (std::size_t i = 0; i < max_tau.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "    %-22s %10.4f\n", joint_names[i].c_str(), max_tau[i]);
      o << buf;
    }
    for (const CheckResult& c : checks) {
      std::string bound;
      if (c.check.min) bound += ">= " + json_util::Json(*c.check.min).dump();
      if (c.check.max) {
        bound += (bound.empty() ? "" : ", ") + ("<= " + json_util::Json(*c.check.max).dump());
      }
      std::snprintf(buf, sizeof(buf), "  [%s] %s = %.6g (%s)%s%s\n", c.pass ? "PASS" : "FAIL",
                    c.check.metric.c_str(), c.value, bound.c_str(), c.note.empty() ? "" : " ",
                    c.note.c_str());
      o << buf;
    }
    o << (passed() ? "  result: PASS\n" : "  result: FAIL\n");
    return o.str();
  }
};

// Trace column names, in order.
inline std::vector<std::string> trace_columns(const RobotModel& model) {
  std::vector<std::string> c{"time",  "roll", "pitch", "yaw", "px", "py", "pz", "wx",
                             "wy",    "wz",   "vx",    "vy",  "vz", "gx", "gy", "gz",
                             "f1x",   "f1y",  "f1z",   "f2x", "f2y", "f2z", "m1y", "m1z",
                             "m2y",   "m2z",  "fex",   "fey", "fez"};
  for (const std::string& n : model.actuated_joints) c.push_back("tau_" + n);
  for (const char* f : {"c1", "c2", "e", "h1", "h2", "mpc_status", "wbc_status"}) c.push_back(f);
  return c;
}

namespace detail {

inline void write_row(std::ostream& out, const TickLog& l) {
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v == 0.0 ? 0.0 : v);
    out << buf;
  };
  num(l.time);
  for (int i = 0; i < srbd::kStateDim; ++i) out << ',', num(l.x[i]);
  for (int i = 0; i < srbd::kInputDim; ++i) out << ',', num(l.u[i]);
  for (Eigen::Index i = 0; i < l.tau.size(); ++i) out << ',', num(l.tau[i]);
  out << ',' << int(l.flags.foot[0]) << ',' << int(l.flags.foot[1]) << ','
      << int(l.flags.object) << ',' << int(l.flags.hand[0]) << ',' << int(l.flags.hand[1]);
  out << ',' << to_string(l.mpc_status) << ',' << to_string(l.wbc_status) << '\n';
}

// Nearest-rank percentile.
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

}  // namespace detail

inline std::vector<CheckResult> evaluate_checks(const std::vector<Check>& checks,
                                                const std::map<std::string, double>& metrics) {
  std::vector<CheckResult> out;
  for (const Check& c : checks) {
    CheckResult r;
    r.check = c;
    const auto it = metrics.find(c.metric);
    if (it == metrics.end()) {
      r.note = "metric not produced by this run";
    } else {
      r.value = it->second;
      r.pass = std::isfinite(r.value) && (!c.min || r.value >= *c.min) &&
               (!c.max || r.value <= *c.max);
    }
    out.push_back(r);
  }
  return out;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<DynamicsModel> variant;
  std::optional<double> duration;
};

inline Scenario apply_options(Scenario s, const RunOptions& o) {
  if (o.seed) s.seed = *o.seed;
  if (o.variant) s.variant = s.controller.model = *o.variant;
  if (o.duration) s.duration = *o.duration;
  s.validate();
  return s;
}

// Runs the closed loop. Writes the CSV trace when `trace` is set. The trace
// holds no wall-clock data, so equal inputs give equal bytes.
inline RunReport run(const Scenario& sc, std::ostream* trace = nullptr) {
  sc.validate();
  const RobotModel model = load_model(sc.model_file);
  ClosedLoop loop(model, sc.object, sc.controller, sc.segments, sc.events, sc.duration);
  Vec3 object_init = sc.object_initial;
  if (sc.object_in_trunk_frame) {
    const TreeKinematics k = forward_kinematics(model.tree, standing_pose(model));
    object_init += k.position[model.tree.root_link];
  }
  ObjectState obj;
  obj.p = object_init;
  loop.initialize(obj, sc.object_on_fixture);

  RunReport rep;
  rep.scenario = sc.name;
  rep.variant = static_cast<int>(sc.variant);
  rep.seed = sc.seed;
  rep.duration = sc.duration;
  rep.joint_names = model.actuated_joints;
  const int na = model.num_actuated();
  std::vector<double> max_tau(static_cast<std::size_t>(na), 0.0);

  if (trace) {
    const std::vector<std::string> cols = trace_columns(model);
    for (std::size_t i = 0; i < cols.size(); ++i) *trace << (i ? "," : "") << cols[i];
    *trace << '\n';
  }

  long ticks = 0, limit_violations = 0, torque_fallbacks = 0, wbc_failures = 0;
  double max_pitch = 0.0, max_roll = 0.0, pitch_sq = 0.0, com_sq = 0.0, height_sq = 0.0;
  double max_com = 0.0, max_tau_ratio = 0.0;
  try {
    while (!loop.done()) {
      const TickLog l = loop.tick();
      if (trace) detail::write_row(*trace, l);
      ++ticks;
      const double pitch = l.x[srbd::kTheta + 1], roll = l.x[srbd::kTheta];
      max_pitch = std::max(max_pitch, std::abs(pitch));
      max_roll = std::max(max_roll, std::abs(roll));
      pitch_sq += pitch * pitch;
      const Vec3 err = Vec3(l.x.segment<3>(srbd::kPos)) - l.com_ref;
      com_sq += err.squaredNorm();
      height_sq += err.z() * err.z();
      max_com = std::max(max_com, err.norm());
      bool violated = false;
      for (int j = 0; j < na; ++j) {
        const double t = std::abs(l.tau[j]), lim = model.limits.torque_max[j];
        max_tau[static_cast<std::size_t>(j)] = std::max(max_tau[static_cast<std::size_t>(j)], t);
        max_tau_ratio = std::max(max_tau_ratio, t / lim);
        violated = violated || t > lim * (1.0 + 1e-9);
      }
      limit_violations += violated ? 1 : 0;
      torque_fallbacks += l.torque_limited ? 1 : 0;
      wbc_failures += l.wbc_status == QpStatus::kOptimal ? 0 : 1;
    }
    if (loop.fall()) {
      rep.completed = false;
      rep.failure = *loop.fall();
    }
  } catch (const NumericalError& e) {
    rep.completed = false;
    rep.failure = e.what();
  }
  rep.final_time = loop.state().time;
  if (trace) trace->flush();

  const double n = std::max<double>(1.0, static_cast<double>(ticks));
  auto& m = rep.metrics;
  m["completed"] = rep.completed ? 1.0 : 0.0;
  m["max_abs_pitch"] = max_pitch;
  m["max_abs_roll"] = max_roll;
  m["pitch_rms"] = std::sqrt(pitch_sq / n);
  m["com_rms"] = std::sqrt(com_sq / n);
  m["max_com_error"] = max_com;
  m["height_rms"] = std::sqrt(height_sq / n);
  m["max_tau_ratio"] = max_tau_ratio;
  m["torque_limit_violations"] = static_cast<double>(limit_violations);
  m["wbc_torque_fallbacks"] = static_cast<double>(torque_fallbacks);
  m["wbc_failures"] = static_cast<double>(wbc_failures);

  const std::vector<MpcAudit>& audit = loop.mpc_audit();
  long optimal = 0, transition_failures = 0, object_solves = 0;
  double violation = 0.0, f_ext = 0.0;
  std::vector<double> mpc_ms;
  for (const MpcAudit& a : audit) {
    mpc_ms.push_back(a.solve_ms);
    if (a.optimal) {
      ++optimal;
      violation = std::max(violation, a.violation);
      if (a.f_ext_error >= 0.0) {
        ++object_solves;
        f_ext = std::max(f_ext, a.f_ext_error);
      }
    } else if (a.transition) {
      ++transition_failures;
    }
  }
  m["mpc_solves"] = static_cast<double>(audit.size());
  m["mpc_feasibility_rate"] =
      audit.empty() ? 1.0 : static_cast<double>(optimal) / static_cast<double>(audit.size());
  m["mpc_max_violation"] = violation;
  m["mpc_transition_failures"] = static_cast<double>(transition_failures);
  m["mpc_object_solves"] = static_cast<double>(object_solves);
  m["f_ext_max_error"] = f_ext;
  m["mpc_solve_p50_ms"] = detail::percentile(mpc_ms, 50.0);
  m["mpc_solve_p95_ms"] = detail::percentile(mpc_ms, 95.0);
  m["wbc_solve_p50_ms"] = detail::percentile(loop.wbc_times_ms(), 50.0);
  m["wbc_solve_p95_ms"] = detail::percentile(loop.wbc_times_ms(), 95.0);
  m["attach_count"] = loop.attach_count();
  double release = -1.0;
  for (const ReleaseRecord& r : loop.releases()) {
    if (r.target) release = std::max(release, (r.position - *r.target).norm());
  }
  if (release >= 0.0) m["release_error"] = release;
  m["releases"] = static_cast<double>(loop.releases().size());

  rep.max_tau = max_tau;
  rep.checks = evaluate_checks(sc.checks, rep.metrics);
  return rep;
}

// Metrics where a larger value is better; all others prefer smaller values.
inline bool higher_is_better(const std::string& metric) {
  return metric == "completed" || metric == "mpc_feasibility_rate";
}

// Counts with no better direction.
inline bool informational(const std::string& metric) {
  return metric == "attach_count" || metric == "releases" || metric == "mpc_solves" ||
         metric == "mpc_object_solves";
}

struct ComparisonRow {
  std::string metric;
  double a = 0.0, b = 0.0, delta = 0.0;  // delta = b - a
  std::string winner;                     // "a", "b", "tie" or "-"
};

inline std::vector<ComparisonRow> compare(const RunReport& a, const RunReport& b) {
  for (const auto& [k, v] : b.metrics) {
    if (!a.metrics.count(k)) {
      throw ConfigError("compare: metric '" + k + "' missing from the first report");
    }
  }
  std::vector<ComparisonRow> rows;
  for (const auto& [k, va] : a.metrics) {
    const auto it = b.metrics.find(k);
    if (it == b.metrics.end()) {
      throw ConfigError("compare: metric '" + k + "' missing from the second report");
    }
    ComparisonRow r{k, va, it->second, it->second - va, "tie"};
    if (informational(k)) {
      r.winner = "-";
    } else if (r.delta != 0.0) {
      const bool b_better = higher_is_better(k) ? r.delta > 0.0 : r.delta < 0.0;
      r.winner = b_better ? "b" : "a";
    }
    rows.push_back(r);
  }
  return rows;
}

inline std::string comparison_table(const RunReport& a, const RunReport& b,
                                    const std::vector<ComparisonRow>& rows) {
  std::ostringstream o;
  char buf[200];
  o << "a: " << a.scenario << " (model " << a.variant << ")\n";
  o << "b: " << b.scenario << " (model " << b.variant << ")\n";
  std::snprintf(buf, sizeof(buf), "%-28s %14s %14s %14s  %s\n", "metric", "a", "b", "b - a",
                "winner");
  o << buf;
  for (const ComparisonRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-28s %14.6g %14.6g %14.6g  %s\n", r.metric.c_str(), r.a,
                  r.b, r.delta, r.winner.c_str());
    o << buf;
  }
  return o.str();
}

struct SweepRow {
  double mass = 0.0;
  bool stable = false;
  double max_abs_pitch = 0.0;
  double max_com_error = 0.0;
  std::string failure;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool monotone = true;             // no stable mass above an unstable one
  double max_stable_mass = -1.0;    // largest mass below the first unstable one

  std::map<std::string, double> metrics() const {
    return {{"max_stable_mass", max_stable_mass}, {"monotone", monotone ? 1.0 : 0.0}};
  }
};

// Standing runs over the mass grid, each in its own loop instance.
inline SweepResult load_capacity_sweep(const Scenario& base, const SweepSpec& spec,
                                       unsigned threads = 0) {
  if (spec.masses.empty()) throw ConfigError("sweep: empty mass grid");
  for (std::size_t i = 1; i < spec.masses.size(); ++i) {
    if (!(spec.masses[i] > spec.masses[i - 1])) {
      throw ConfigError("sweep: mass grid must be strictly increasing");
    }
  }
  SweepResult out;
  out.rows.resize(spec.masses.size());
  std::vector<std::string> errors(spec.masses.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < spec.masses.size(); i = next++) {
      SweepRow& row = out.rows[i];
      row.mass = spec.masses[i];
      try {
        Scenario s = base;
        const double mass = spec.masses[i];
        s.object = s.object.shape == ObjectShape::kSphere
                       ? ObjectParams::sphere(mass, s.object.size.x())
                       : ObjectParams::box(mass, s.object.size);
        s.checks.clear();
        const RunReport r = run(s);
        row.max_abs_pitch = r.metrics.at("max_abs_pitch");
        row.max_com_error = r.metrics.at("max_com_error");
        row.failure = r.failure;
        row.stable = r.completed && row.max_abs_pitch < spec.max_pitch &&
                     row.max_com_error < spec.max_com_error;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(spec.masses.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::string& e : errors) {
    if (!e.empty()) throw std::runtime_error("sweep: " + e);
  }
  bool seen_unstable = false;
  for (const SweepRow& r : out.rows) {
    if (!r.stable) seen_unstable = true;
    if (r.stable && seen_unstable) out.monotone = false;
    if (r.stable && !seen_unstable) out.max_stable_mass = r.mass;
  }
  return out;
}

}  // namespace mcmpc

#endif  // MCMPC_CLI_RUNNER_HPP_
