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

#include "mcmpc/cli_runner.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace mcmpc {
namespace {

using json_util::Json;

Json HoldScenario(double mass, double duration) {
  Json j = Json::parse(R"({
    "schema": 1, "name": "hold", "variant": 2, "duration": 1.0,
    "object": {"shape": "box", "mass": 5.0, "size": [0.2, 0.3, 0.2],
               "initial": [0.25, 0.0, -0.05], "frame": "trunk"},
    "segments": [{"label": "hold", "start": 0.0, "object": true,
                  "hands": [[0.25, 0.15, -0.05], [0.25, -0.15, -0.05]]}],
    "events": [{"time": 0.0, "kind": "attach"}],
    "checks": [{"metric": "max_abs_pitch", "max": 0.2}]
  })");
  j["object"]["mass"] = mass;
  j["duration"] = duration;
  return j;
}

Scenario Parse(const Json& j) { return parse_scenario(j, data_path("scenarios")); }

TEST(ScenarioTest, ParsesBundledScenarios) {
  const auto files = list_scenarios(data_path("scenarios"));
  ASSERT_EQ(files.size(), 6u);
  for (const auto& f : files) {
    const Scenario s = load_scenario(f);
    EXPECT_EQ(s.name, f.stem().string());
    EXPECT_FALSE(s.segments.empty());
  }
}

TEST(ScenarioTest, RejectsUnknownKeys) {
  Json j = HoldScenario(5.0, 1.0);
  j["colour"] = "red";
  EXPECT_THROW(Parse(j), ConfigError);
  j = HoldScenario(5.0, 1.0);
  j["segments"][0]["speed"] = 1.0;
  EXPECT_THROW(Parse(j), ConfigError);
  j = HoldScenario(5.0, 1.0);
  j["mpc"] = {{"horizon_length", 20}};
  EXPECT_THROW(Parse(j), ConfigError);
}

TEST(ScenarioTest, RejectsBadSchemaAndValues) {
  Json j = HoldScenario(5.0, 1.0);
  j["schema"] = 2;
  EXPECT_THROW(Parse(j), ConfigError);
  j = HoldScenario(5.0, 1.0);
  j["variant"] = 3;
  EXPECT_THROW(Parse(j), ConfigError);
  j = HoldScenario(5.0, 1.0);
  j["model_file"] = "models/missing.json";
  EXPECT_THROW(Parse(j), ConfigError);
  j = HoldScenario(5.0, 1.0);
  j["events"][0]["time"] = 2.0;  // after the end
  EXPECT_THROW(Parse(j), ConfigError);
  j = HoldScenario(5.0, 1.0);
  j["segments"].push_back({{"start", 0.0}});
  EXPECT_THROW(Parse(j), ConfigError);
  j = HoldScenario(5.0, 1.0);
  j["checks"][0].erase("max");
  EXPECT_THROW(Parse(j), ConfigError);
}

TEST(ScenarioTest, OverridesApply) {
  Json j = HoldScenario(5.0, 1.0);
  j["mpc"] = {{"horizon", 10}, {"mu", 0.4}};
  j["wbc"] = {{"enforce_cop", false}};
  j["gait"] = {{"period", 0.5}};
  const Scenario s = Parse(j);
  EXPECT_EQ(s.controller.mpc.horizon, 10);
  EXPECT_DOUBLE_EQ(s.controller.mpc.mu, 0.4);
  EXPECT_FALSE(s.controller.wbc.enforce_cop);
  EXPECT_DOUBLE_EQ(s.controller.gait_period, 0.5);
  RunOptions o;
  o.variant = DynamicsModel::kModel1;
  o.seed = 9;
  o.duration = 0.5;
  const Scenario t = apply_options(s, o);
  EXPECT_EQ(t.controller.model, DynamicsModel::kModel1);
  EXPECT_EQ(t.seed, 9u);
  EXPECT_DOUBLE_EQ(t.duration, 0.5);
}

TEST(RunTest, ZeroDurationGivesEmptyTrace) {
  Json j = HoldScenario(5.0, 0.0);
  j["events"] = Json::array();
  std::ostringstream trace;
  const RunReport r = run(Parse(j), &trace);
  const std::string text = trace.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);  // header only
  EXPECT_TRUE(r.completed);
  EXPECT_TRUE(r.passed());
}

TEST(RunTest, TraceColumnsAndDeterminism) {
  const Scenario s = Parse(HoldScenario(5.0, 0.2));
  std::ostringstream a, b;
  run(s, &a);
  run(s, &b);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  const auto cols = [](const std::string& line) {
    return std::count(line.begin(), line.end(), ',') + 1;
  };
  EXPECT_EQ(cols(header), 1 + 15 + 13 + 16 + 5 + 2);
  EXPECT_EQ(cols(row), cols(header));
  EXPECT_EQ(header.substr(0, 11), "time,roll,p");
  EXPECT_NE(row.find("optimal"), std::string::npos);
}

TEST(RunTest, StandingCenterOfMassDrift) {
  Json j = HoldScenario(0.0, 1.0);
  j.erase("object");
  j["events"] = Json::array();
  j["segments"][0]["object"] = false;
  const Scenario s = Parse(j);
  const RobotModel model = load_model(s.model_file);
  ClosedLoop loop(model, s.object, s.controller, s.segments, s.events, s.duration);
  loop.initialize(ObjectState{}, false);
  const Vec3 p0 = loop.plant().measure(loop.state()).body.p;
  double drift = 0.0;
  while (!loop.done()) {
    loop.tick();
    drift = std::max(drift, (loop.plant().measure(loop.state()).body.p - p0).norm());
  }
  EXPECT_LT(drift, 1e-3);
}

TEST(RunTest, FallHasNamedCause) {
  const RunReport r = run(Parse(HoldScenario(100.0, 1.5)));
  EXPECT_FALSE(r.completed);
  EXPECT_NE(r.failure.find("fall detected"), std::string::npos) << r.failure;
  EXPECT_FALSE(r.passed());
  EXPECT_LT(r.final_time, 1.5);
}

TEST(RunTest, ChecksEvaluated) {
  const std::map<std::string, double> m{{"a", 1.0}, {"b", 5.0}};
  const auto res = evaluate_checks({{"a", 0.5, 2.0}, {"b", std::nullopt, 4.0}, {"c", 0.0, {}}},
                                   m);
  ASSERT_EQ(res.size(), 3u);
  EXPECT_TRUE(res[0].pass);
  EXPECT_FALSE(res[1].pass);
  EXPECT_FALSE(res[2].pass);
  EXPECT_FALSE(res[2].note.empty());
}

TEST(RunTest, PercentileNearestRank) {
  EXPECT_DOUBLE_EQ(detail::percentile({5, 1, 4, 2, 3}, 50.0), 3.0);
  EXPECT_DOUBLE_EQ(detail::percentile({5, 1, 4, 2, 3}, 95.0), 5.0);
  EXPECT_DOUBLE_EQ(detail::percentile({}, 95.0), 0.0);
}

TEST(CompareTest, IdenticalReportsTie) {
  RunReport a;
  a.metrics = {{"pitch_rms", 0.1}, {"mpc_feasibility_rate", 1.0}};
  const auto rows = compare(a, a);
  for (const ComparisonRow& r : rows) {
    EXPECT_EQ(r.delta, 0.0);
    EXPECT_EQ(r.winner, "tie");
  }
}

TEST(CompareTest, WinnerFollowsDirection) {
  RunReport a, b;
  a.metrics = {{"pitch_rms", 0.1}, {"mpc_feasibility_rate", 0.9}};
  b.metrics = {{"pitch_rms", 0.05}, {"mpc_feasibility_rate", 1.0}};
  for (const ComparisonRow& r : compare(a, b)) EXPECT_EQ(r.winner, "b") << r.metric;
  a.metrics["mpc_solves"] = 10.0;
  b.metrics["mpc_solves"] = 12.0;
  for (const ComparisonRow& r : compare(a, b)) {
    if (r.metric == "mpc_solves") EXPECT_EQ(r.winner, "-");
  }
}

TEST(CompareTest, MissingMetricThrows) {
  RunReport a, b;
  a.metrics = {{"pitch_rms", 0.1}};
  b.metrics = {{"pitch_rms", 0.1}, {"height_rms", 0.0}};
  EXPECT_THROW(compare(a, b), ConfigError);
  EXPECT_THROW(compare(b, a), ConfigError);
}

TEST(CompareTest, ReportJsonRoundTrip) {
  const RunReport r = run(Parse(HoldScenario(5.0, 0.1)));
  const RunReport back = RunReport::from_json(r.to_json());
  EXPECT_EQ(back.metrics, r.metrics);
  EXPECT_EQ(back.scenario, r.scenario);
  EXPECT_EQ(back.max_tau.size(), 16u);
}

TEST(SweepTest, LightStableAbsurdUnstable) {
  Json j = HoldScenario(0.0, 1.0);
  const Scenario s = Parse(j);
  SweepSpec spec;
  spec.masses = {0.0, 100.0};
  const SweepResult r = load_capacity_sweep(s, spec, 2);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_TRUE(r.rows[0].stable);
  EXPECT_FALSE(r.rows[1].stable);
  EXPECT_TRUE(r.monotone);
  EXPECT_DOUBLE_EQ(r.max_stable_mass, 0.0);
}

TEST(SweepTest, RejectsUnsortedGrid) {
  SweepSpec spec;
  spec.masses = {2.0, 1.0};
  EXPECT_THROW(load_capacity_sweep(Parse(HoldScenario(0.0, 0.1)), spec), ConfigError);
}

}  // namespace
}  // namespace mcmpc
