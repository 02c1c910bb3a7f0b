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

// Offline contact schedules: binary foot / object / hand activations as a
// piecewise-constant function of time, and a simple alternating gait
// generator.

#ifndef MCMPC_CONTACT_SCHEDULE_HPP_
#define MCMPC_CONTACT_SCHEDULE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcmpc/common.hpp"

namespace mcmpc {

// Times closer than this to a phase start count as inside that phase.
inline constexpr double kTimeEpsilon = 1e-9;

struct ContactFlags {
  std::array<bool, 2> foot{true, true};  // sigma_C1, sigma_C2
  bool object = false;                   // sigma_e
  std::array<bool, 2> hand{false, false};  // sigma_H1, sigma_H2

  ContactFlags() = default;
  ContactFlags(int c1, int c2, int e = 0, int h1 = 0, int h2 = 0)
      : foot{c1 != 0, c2 != 0}, object(e != 0), hand{h1 != 0, h2 != 0} {}

  double sigma_foot(int n) const { return foot[n] ? 1.0 : 0.0; }
  double sigma_object() const { return object ? 1.0 : 0.0; }
  double sigma_hand(int n) const { return hand[n] ? 1.0 : 0.0; }
  int num_stance() const { return static_cast<int>(foot[0]) + static_cast<int>(foot[1]); }

  bool operator==(const ContactFlags&) const = default;

  std::string to_string() const {
    std::string s = "(";
    for (bool b : {foot[0], foot[1], object, hand[0], hand[1]}) {
      if (s.size() > 1) s += ",";
      s += b ? "1" : "0";
    }
    return s + ")";
  }
};

struct Phase {
  double start = 0.0;
  ContactFlags flags;
  std::string label;
};

struct Timeline {
  std::vector<Phase> phases;
  double gait_period = 0.4;   // stance-swing cycle, seconds
  double duty_factor = 0.5;   // stance fraction of one foot per cycle

  // Phases must start at t = 0 and have strictly increasing start times.
  void validate() const {
    if (phases.empty()) throw ConfigError("timeline has no phases");
    if (std::abs(phases.front().start) > kTimeEpsilon) {
      throw ConfigError("timeline must start at t = 0");
    }
    for (std::size_t i = 1; i < phases.size(); ++i) {
      if (!(phases[i].start > phases[i - 1].start)) {
        throw ConfigError("timeline phases overlap or are out of order at '" + phases[i].label +
                          "'");
      }
    }
  }

  double end_of_phase(std::size_t i) const {
    return i + 1 < phases.size() ? phases[i + 1].start : std::numeric_limits<double>::infinity();
  }

  // Index of the phase containing t; the later phase wins at a boundary.
  std::size_t phase_index(double t) const {
    if (phases.empty()) throw ConfigError("timeline has no phases");
    if (t < -kTimeEpsilon) throw std::invalid_argument("timeline queried at negative time");
    const auto it = std::upper_bound(phases.begin(), phases.end(), t + kTimeEpsilon,
                                     [](double v, const Phase& p) { return v < p.start; });
    return it == phases.begin() ? 0 : static_cast<std::size_t>(it - phases.begin()) - 1;
  }
};

inline ContactFlags flags_at(const Timeline& timeline, double t) {
  return timeline.phases[timeline.phase_index(t)].flags;
}

inline std::vector<ContactFlags> horizon_flags(const Timeline& timeline, double t0, double dt,
                                               int k) {
  if (!(dt > 0.0) || k < 1) throw std::invalid_argument("horizon_flags: need dt > 0, k >= 1");
  std::vector<ContactFlags> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(flags_at(timeline, t0 + i * dt));
  return out;
}

// Maximal interval [begin, end) around t during which foot n keeps its
// current stance/swing state.
struct FootInterval {
  double begin = 0.0;
  double end = std::numeric_limits<double>::infinity();
  bool stance = true;

  double duration() const { return end - begin; }
  // Progress through the interval in [0, 1].
  double phase(double t) const {
    if (!std::isfinite(end) || end <= begin) return 0.0;
    return std::clamp((t - begin) / (end - begin), 0.0, 1.0);
  }
};

inline FootInterval foot_interval(const Timeline& timeline, double t, int foot) {
  const std::size_t i = timeline.phase_index(t);
  const bool state = timeline.phases[i].flags.foot[foot];
  std::size_t lo = i, hi = i;
  while (lo > 0 && timeline.phases[lo - 1].flags.foot[foot] == state) --lo;
  while (hi + 1 < timeline.phases.size() && timeline.phases[hi + 1].flags.foot[foot] == state) {
    ++hi;
  }
  return {timeline.phases[lo].start, timeline.end_of_phase(hi), state};
}

// Alternating single-stance phases of period/2 each, foot 1 in stance
// first, starting at `start` and truncated at start + duration. With
// overlap > 0 every half period ends with a double-stance window of that
// length. Object and hand flags are copied from `base`.
inline std::vector<Phase> make_walk_gait(double period, double start, double duration,
                                         const ContactFlags& base = {}, double overlap = 0.0) {
  if (!(period > 0.0)) throw std::invalid_argument("make_walk_gait: period must be positive");
  const double half = 0.5 * period;
  if (overlap < 0.0 || overlap >= half) {
    throw std::invalid_argument("make_walk_gait: overlap must lie in [0, period/2)");
  }
  std::vector<Phase> out;
  const double end = start + duration;
  for (int n = 0;; ++n) {
    const double t = start + n * half;
    if (t >= end - kTimeEpsilon) break;
    ContactFlags f = base;
    const bool first = (n % 2) == 0;
    f.foot = {first, !first};
    out.push_back({t, f, first ? "stance_1" : "stance_2"});
    if (overlap > 0.0 && t + half - overlap < end - kTimeEpsilon) {
      ContactFlags d = base;
      d.foot = {true, true};
      out.push_back({t + half - overlap, d, "double_stance"});
    }
  }
  return out;
}

}  // namespace mcmpc

#endif  // MCMPC_CONTACT_SCHEDULE_HPP_
