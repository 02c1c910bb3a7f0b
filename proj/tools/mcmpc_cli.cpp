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

// mcmpc_cli: run, compare and sweep scenarios.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcmpc/mcmpc.hpp"

namespace {

namespace fs = std::filesystem;
using mcmpc::RunReport;
using mcmpc::Scenario;

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<int> model;
  std::optional<double> duration;
  std::string out;

  mcmpc::RunOptions options() const {
    mcmpc::RunOptions o;
    o.seed = seed;
    if (model) o.variant = *model == 1 ? mcmpc::DynamicsModel::kModel1
                                       : mcmpc::DynamicsModel::kModel2;
    o.duration = duration;
    return o;
  }
};

void add_common(CLI::App* cmd, Common* c) {
  cmd->add_option("--seed", c->seed, "Override the scenario seed");
  cmd->add_option("--model", c->model, "SRBD variant: 1 combined body, 2 external force")
      ->check(CLI::IsMember({1, 2}));
  cmd->add_option("--duration", c->duration, "Override the run duration [s]")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", c->out, "Output directory for traces and reports");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw mcmpc::ConfigError("cannot write '" + path.string() + "'");
  f << text;
}

// Runs one scenario; writes <out>/<name>.csv and <name>.report.json.
RunReport run_one(const fs::path& path, const Common& c) {
  const Scenario s = mcmpc::apply_options(mcmpc::load_scenario(path), c.options());
  if (c.out.empty()) return mcmpc::run(s);
  fs::create_directories(c.out);
  const fs::path csv = fs::path(c.out) / (s.name + ".csv");
  std::ofstream trace(csv, std::ios::binary);
  if (!trace) throw mcmpc::ConfigError("cannot write '" + csv.string() + "'");
  const RunReport r = mcmpc::run(s, &trace);
  write_text(fs::path(c.out) / (s.name + ".report.json"), r.to_json().dump(2) + "\n");
  return r;
}

// A report file, or a scenario that is run first.
RunReport report_from(const fs::path& path, const Common& c) {
  const mcmpc::json_util::Json j = mcmpc::json_util::parse_file(path);
  if (j.is_object() && j.contains("metrics")) return RunReport::from_json(j);
  return run_one(path, c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loco-manipulation MPC + WBC simulation runner"};
  app.require_subcommand(1);

  Common run_c;
  std::string run_path;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a scenario");
  run_cmd->add_option("--scenario", run_path, "Scenario file")->required();
  add_common(run_cmd, &run_c);

  Common cmp_c;
  std::vector<std::string> cmp_paths;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "Compare two runs (scenarios or reports)");
  cmp_cmd->add_option("--scenario,inputs", cmp_paths, "Two scenario or report files")
      ->required()
      ->expected(2);
  add_common(cmp_cmd, &cmp_c);

  Common sw_c;
  std::string sw_path;
  unsigned threads = 0;
  CLI::App* sw_cmd = app.add_subcommand("sweep", "Load-capacity sweep over object mass");
  sw_cmd->add_option("--scenario", sw_path, "Scenario with a sweep block")->required();
  sw_cmd->add_option("--threads", threads, "Worker threads (0: one per core)");
  add_common(sw_cmd, &sw_c);

  std::string list_dir = mcmpc::data_path("scenarios").string();
  CLI::App* list_cmd = app.add_subcommand("list-scenarios", "List bundled scenarios");
  list_cmd->add_option("--dir", list_dir, "Scenario directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const RunReport r = run_one(run_path, run_c);
      std::cout << r.table();
      return r.passed() ? 0 : 1;
    }
    if (*cmp_cmd) {
      const RunReport a = report_from(cmp_paths[0], cmp_c);
      const RunReport b = report_from(cmp_paths[1], cmp_c);
      std::cout << mcmpc::comparison_table(a, b, mcmpc::compare(a, b));
      return 0;
    }
    if (*sw_cmd) {
      const Scenario s = mcmpc::apply_options(mcmpc::load_scenario(sw_path), sw_c.options());
      if (!s.sweep) throw mcmpc::ConfigError(s.name + ": no sweep block");
      const mcmpc::SweepResult res = mcmpc::load_capacity_sweep(s, *s.sweep, threads);
      std::printf("%10s %8s %14s %14s  %s\n", "mass [kg]", "stable", "max |pitch|",
                  "max com err", "stop cause");
      std::string csv = "mass,stable,max_abs_pitch,max_com_error\n";
      for (const mcmpc::SweepRow& r : res.rows) {
        std::printf("%10.3f %8s %14.6f %14.6f  %s\n", r.mass, r.stable ? "yes" : "no",
                    r.max_abs_pitch, r.max_com_error, r.failure.c_str());
        char line[128];
        std::snprintf(line, sizeof(line), "%.9g,%d,%.9g,%.9g\n", r.mass, int(r.stable),
                      r.max_abs_pitch, r.max_com_error);
        csv += line;
      }
      std::printf("monotone verdicts: %s\n", res.monotone ? "yes" : "no");
      std::printf("maximum stable standing load: %.3f kg (reference: 14 kg on a "
                  "higher-fidelity plant)\n",
                  res.max_stable_mass);
      bool ok = true;
      for (const mcmpc::CheckResult& c : mcmpc::evaluate_checks(s.sweep->checks, res.metrics())) {
        std::printf("[%s] %s = %.6g\n", c.pass ? "PASS" : "FAIL", c.check.metric.c_str(),
                    c.value);
        ok = ok && c.pass;
      }
      if (!sw_c.out.empty()) {
        fs::create_directories(sw_c.out);
        write_text(fs::path(sw_c.out) / (s.name + ".sweep.csv"), csv);
      }
      return ok ? 0 : 1;
    }
    if (*list_cmd) {
      for (const fs::path& p : mcmpc::list_scenarios(list_dir)) {
        try {
          const Scenario s = mcmpc::load_scenario(p);
          std::printf("%-22s %s\n", s.name.c_str(), s.description.c_str());
        } catch (const std::exception& e) {
          std::printf("%-22s (invalid: %s)\n", p.stem().string().c_str(), e.what());
        }
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
