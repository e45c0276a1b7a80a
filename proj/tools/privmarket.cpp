//
// Copyright 2026 The privmarket Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Command-line front end over the C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "privmarket/privmarket.h"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitError = 2;

int report(pm_status st, char* json, int passed) {
  if (st != PM_OK) {
    std::cerr << "error (" << pm_status_name(st) << "): " << pm_last_error() << "\n";
    return kExitError;
  }
  std::cout << json << "\n";
  pm_string_free(json);
  return passed ? 0 : kExitFail;
}

bool parse_seed_range(const std::string& s, std::uint64_t& first, std::uint64_t& last) {
  static const std::regex re(R"((\d+)\.\.(\d+))");
  std::smatch m;
  if (!std::regex_match(s, m, re)) return false;
  first = std::stoull(m[1]);
  last = std::stoull(m[2]);
  return first <= last;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded-budget private prediction market simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds;
  unsigned parallel = 1;
  auto* run = app.add_subcommand("run", "Run a trial sweep from a JSON config");
  run->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("--seeds", seeds, "Seed range first..last (overrides the config)");
  run->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);

  std::string metrics_dir, check = "all";
  auto* verify = app.add_subcommand("verify", "Check a metrics directory against the bounds");
  verify->add_option("--metrics", metrics_dir, "Directory written by run")->required();
  verify->add_option("--check", check, "Which check to run")
      ->check(CLI::IsMember({"precision", "budget", "shares", "noise_loss", "summary", "all"}));

  std::uint64_t T = 0;
  std::size_t d = 2, pairs = 10000;
  double epsilon = 1.0;
  std::uint64_t audit_seed = 0;
  auto* audit = app.add_subcommand("audit", "Sensitivity and participation audit of the schedule");
  audit->add_option("--T", T, "Horizon")->required();
  audit->add_option("--d", d, "Securities")->required();
  audit->add_option("--epsilon", epsilon, "Privacy parameter")->required();
  audit->add_option("--pairs", pairs, "Neighbouring stream pairs");
  audit->add_option("--seed", audit_seed, "Seed for the sampled streams");

  double B1 = 0.0, alpha = 0.0, gamma = 0.0, sched_eps = 1.0, first_horizon = 0.0, growth = 4.0;
  std::size_t sched_d = 2;
  unsigned k_max = 3;
  auto* schedule = app.add_subcommand("schedule", "Stage parameters and their inequalities");
  schedule->add_option("--B1", B1, "Worst-case loss of the base cost")->required();
  schedule->add_option("--d", sched_d, "Securities")->required();
  schedule->add_option("--alpha", alpha, "Precision")->required();
  schedule->add_option("--gamma", gamma, "Failure probability")->required();
  schedule->add_option("--epsilon", sched_eps, "Privacy parameter")->required();
  schedule->add_option("--k-max", k_max, "Stages to list");
  schedule->add_option("--first-horizon", first_horizon, "Replace T^(1)");
  schedule->add_option("--growth", growth, "Stage horizon factor");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    std::ifstream in(config_path);
    std::stringstream text;
    text << in.rdbuf();
    std::uint64_t first = 0, last = 0;
    if (!seeds.empty() && !parse_seed_range(seeds, first, last)) {
      std::cerr << "error: --seeds expects first..last\n";
      return kExitError;
    }
    char* json = nullptr;
    pm_status st = pm_run_trials(text.str().c_str(), out_dir.c_str(), seeds.empty() ? 0 : 1,
                                 first, last, parallel, &json);
    return report(st, json, 1);
  }
  if (*verify) {
    char* json = nullptr;
    int passed = 0;
    pm_status st = pm_verify(metrics_dir.c_str(), check.c_str(), &json, &passed);
    return report(st, json, passed);
  }
  if (*audit) {
    char* json = nullptr;
    int passed = 0;
    pm_status st = pm_audit(T, d, epsilon, pairs, audit_seed, &json, &passed);
    return report(st, json, passed);
  }
  char* json = nullptr;
  pm_status st =
      pm_schedule(B1, sched_d, alpha, gamma, sched_eps, k_max, first_horizon, growth, &json);
  return report(st, json, 1);
}
