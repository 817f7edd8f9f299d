// Copyright 2026 The ttp Authors
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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttp/scenario.hpp"

namespace {

using json = nlohmann::json;

json metrics_json(const ttp::MetricsReport& m) {
  json j;
  j["total_time_s"] = m.total_time;
  j["max_abs_pitch_deg"] = m.max_abs_pitch;
  j["max_abs_pitch_rate_deg_s"] = m.max_abs_pitch_rate;
  j["rotation_angle_deg"] = m.rotation_angle;
  j["max_z_accel_m_s2"] = m.max_z_accel;
  j["net_progress_m"] = m.net_progress;
  j["replan_median_ms"] = m.replan_median_ms;
  j["replan_p95_ms"] = m.replan_p95_ms;
  j["replan_count"] = m.replan_count;
  j["success"] = m.success;
  j["message"] = m.message;
  return j;
}

json replans_json(const std::vector<ttp::ReplanStat>& replans) {
  json arr = json::array();
  for (const auto& r : replans) {
    json j;
    j["t"] = r.t;
    j["wall_ms"] = r.wall_ms;
    j["iterations"] = r.iterations;
    j["max_eq"] = r.max_eq;
    j["max_ineq"] = r.max_ineq;
    j["accepted"] = r.accepted;
    arr.push_back(j);
  }
  return arr;
}

void write_outputs(const ttp::Scenario& scenario, const ttp::RunResult& result,
                   const std::string& out_dir, const std::string& tag) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& name) {
    return (fs::path(out_dir) / (tag.empty() ? name : tag + "_" + name)).string();
  };

  ttp::write_terrain_csv(result.terrain, path("terrain.csv"));
  std::ofstream(path("episode.csv"), std::ios::binary) << ttp::episode_csv(result.log.rows);
  if (result.log.first_plan.accepted) {
    std::ofstream(path("plan.csv"), std::ios::binary)
        << ttp::plan_csv(result.log.first_plan.traj, result.terrain);
  }
  json stats;
  stats["metrics"] = metrics_json(result.metrics);
  stats["replans"] = replans_json(result.log.replans);
  json modes = json::array();
  for (int m : result.log.mode_sequence) modes.push_back(m);
  stats["mode_sequence"] = modes;
  std::ofstream(path("stats.json")) << stats.dump(2) << "\n";
}

void print_metrics(const std::string& label, const ttp::MetricsReport& m) {
  std::cout << label << ": " << (m.success ? "completed" : "aborted (" + m.message + ")")
            << "\n  total time        " << m.total_time << " s"
            << "\n  max |pitch|       " << m.max_abs_pitch << " deg"
            << "\n  max |pitch rate|  " << m.max_abs_pitch_rate << " deg/s"
            << "\n  rotation angle    " << m.rotation_angle << " deg"
            << "\n  max |z accel|     " << m.max_z_accel << " m/s^2"
            << "\n  net progress      " << m.net_progress << " m"
            << "\n  replans           " << m.replan_count << " (median "
            << m.replan_median_ms << " ms, p95 " << m.replan_p95_ms << " ms)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planar terrain-traversal planning for articulated tracked robots"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario end to end");
  std::string scenario_file, out_dir = "out", ablate_key;
  bool raw_contact = false;
  unsigned seed = 0;
  run->add_option("scenario", scenario_file, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--ablate", ablate_key, "drop a cost term: time|stab|smo")
      ->check(CLI::IsMember({"time", "stab", "smo"}));
  run->add_flag("--raw-contact", raw_contact, "simulate contact on the raw profile");
  run->add_option("--seed", seed, "seed for start-position jitter (0 = nominal)");

  CLI11_PARSE(app, argc, argv);

  try {
    ttp::Scenario scenario = ttp::Scenario::from_file(scenario_file);
    if (raw_contact) scenario.episode.raw_contact = true;

    const ttp::RunResult base = ttp::run_scenario(scenario, ttp::AblateTerm::kNone, seed);
    write_outputs(scenario, base, out_dir, "");
    print_metrics(scenario.name, base.metrics);

    if (!ablate_key.empty()) {
      ttp::AblateTerm term = ttp::AblateTerm::kTime;
      if (ablate_key == "stab") term = ttp::AblateTerm::kStability;
      if (ablate_key == "smo") term = ttp::AblateTerm::kSmoothness;
      const ttp::RunResult ablated = ttp::run_scenario(scenario, term, seed);
      write_outputs(scenario, ablated, out_dir, "ablate_" + ablate_key);
      print_metrics(scenario.name + " (w/o " + ablate_key + " cost)", ablated.metrics);
    }
    if (!base.metrics.success) return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
