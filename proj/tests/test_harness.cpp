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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "doctest.h"
#include "privmarket/error.hpp"
#include "privmarket/harness.hpp"

using namespace privmarket;
namespace fs = std::filesystem;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kInvalidState;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

json mixed_config() {
  return json::parse(R"({
    "market": {"d": 2, "epsilon": 1.0, "alpha": 0.3, "gamma": 0.1, "T": 64},
    "traders": [
      {"kind": "herd", "coordinate": 0},
      {"kind": "random"},
      {"kind": "arbitrage_hunter", "belief": [0.5, 0.5]}
    ],
    "outcome": {"distribution": [0.5, 0.5]},
    "seeds": {"first": 0, "last": 199}
  })");
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("privmarket_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing rejects unknown fields with their path") {
  json j = mixed_config();
  j["market"]["lamda"] = 0.1;
  CHECK(code_of([&] { RunConfig::from_json(j); }) == Errc::kConfig);
  CHECK(message_of([&] { RunConfig::from_json(j); }).find("market.lamda") != std::string::npos);

  j = mixed_config();
  j["traders"][1]["speed"] = 3;
  CHECK(message_of([&] { RunConfig::from_json(j); }).find("traders[1].speed") !=
        std::string::npos);

  j = mixed_config();
  j["market"]["T"] = "sixty-four";
  CHECK(message_of([&] { RunConfig::from_json(j); }).find("market.T") != std::string::npos);

  j = mixed_config();
  j["traders"][0]["kind"] = "whale";
  CHECK(code_of([&] { RunConfig::from_json(j); }) == Errc::kConfig);

  j = mixed_config();
  j["market"]["lambda"] = 0.5;
  CHECK(code_of([&] { RunConfig::from_json(j); }) == Errc::kConfig);
  j["market"]["allow_unsafe_lambda"] = true;
  CHECK(RunConfig::from_json(j).effective_market().resolved_lambda() == 0.5);

  j = mixed_config();
  j.erase("traders");
  CHECK(code_of([&] { RunConfig::from_json(j); }) == Errc::kConfig);
}

TEST_CASE("config echo parses back to the same config") {
  RunConfig c = RunConfig::from_json(mixed_config());
  RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(c.roster_size() == 3);
  CHECK(c.resolved_slots() == 64 * 3);
}

TEST_CASE("trials are deterministic and independent of thread count") {
  json j = mixed_config();
  j["seeds"] = {{"first", 10}, {"last", 29}};
  RunConfig c = RunConfig::from_json(j);
  auto a = run_trials(c, 1);
  auto b = run_trials(c, 4);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == 10 + i);
    CHECK(a[i].to_json().dump() == b[i].to_json().dump());
  }
  CHECK(run_trial(c, 12).to_json().dump() == a[2].to_json().dump());
}

TEST_CASE("ledger identity holds in every row") {
  json j = mixed_config();
  j["seeds"] = {{"first", 0}, {"last", 49}};
  for (const TrialMetrics& m : run_trials(RunConfig::from_json(j), 4))
    CHECK(m.designer_loss == doctest::Approx(m.mm_loss + m.ntl - m.fees).epsilon(1e-12));
}

TEST_CASE("noise off runs publish the true prices") {
  json j = mixed_config();
  j["market"]["noise_off"] = true;
  j["seeds"] = {{"first", 0}, {"last", 99}};
  auto trials = run_trials(RunConfig::from_json(j), 4);
  for (const TrialMetrics& m : trials) {
    CHECK(m.max_price_gap == 0.0);
    CHECK(m.max_share_gap == 0.0);
  }
  CHECK(verify_precision(trials, 0.3, 0.1).statistic == 0.0);
  CHECK(verify_share_accuracy(trials, 2, 64, 1.0, 0.1).statistic == 0.0);
}

TEST_CASE("abstainers cost nothing without noise") {
  json j = mixed_config();
  j["market"]["noise_off"] = true;
  j["traders"] = json::array({{{"kind", "abstainer"}}});
  j["seeds"] = {{"first", 0}, {"last", 99}};
  for (const TrialMetrics& m : run_trials(RunConfig::from_json(j), 4)) {
    CHECK(m.designer_loss == 0.0);
    CHECK(m.arrivals == 0);
  }
}

TEST_CASE("200 seeds at T = 64 finish quickly") {
  RunConfig c = RunConfig::from_json(mixed_config());
  auto t0 = std::chrono::steady_clock::now();
  auto trials = run_trials(c, 1);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(trials.size() == 200);
  CHECK(secs < 10.0);
  MESSAGE("200 seeds: " << secs << " s");

  const double lambda = c.effective_market().resolved_lambda();
  CHECK(verify_precision(trials, 0.3, 0.1).passed);
  CHECK(verify_share_accuracy(trials, 2, 64, 1.0, 0.1).passed);
  CHECK(verify_budget(trials, std::log(2.0) / lambda).passed);
  CHECK(verify_noise_loss(trials, lambda).passed);
}

TEST_CASE("precision fails far above lambda star") {
  json j = mixed_config();
  j["market"]["lambda_multiplier"] = 50.0;
  j["market"]["allow_unsafe_lambda"] = true;
  j["seeds"] = {{"first", 0}, {"last", 199}};
  auto trials = run_trials(RunConfig::from_json(j), 4);
  CheckReport r = verify_precision(trials, 0.3, 0.1);
  CHECK_FALSE(r.passed);
  CHECK(r.statistic > 0.5);
}

TEST_CASE("verifiers need enough seeds") {
  std::vector<TrialMetrics> few(99);
  CHECK(code_of([&] { verify_precision(few, 0.1, 0.1); }) == Errc::kInsufficientData);
  CHECK(code_of([&] { verify_budget(few, 1.0); }) == Errc::kInsufficientData);
  CHECK(code_of([&] { verify_share_accuracy(few, 2, 16, 1, 0.1); }) == Errc::kInsufficientData);
  CHECK(code_of([&] { verify_noise_loss(few, 0.01); }) == Errc::kInsufficientData);
}

TEST_CASE("exceedance tolerance is three binomial standard errors") {
  std::vector<TrialMetrics> t(100);
  for (std::size_t i = 0; i < 19; ++i) t[i].max_price_gap = 1.0;
  CheckReport r = verify_precision(t, 0.5, 0.1);
  CHECK(r.tolerance == doctest::Approx(0.09));
  CHECK(r.statistic == doctest::Approx(0.19));
  CHECK(r.passed);
  t[19].max_price_gap = 1.0;
  CHECK_FALSE(verify_precision(t, 0.5, 0.1).passed);
}

TEST_CASE("outputs round trip and the summary re-derives") {
  json j = mixed_config();
  j["seeds"] = {{"first", 0}, {"last", 119}};
  RunConfig c = RunConfig::from_json(j);
  auto trials = run_trials(c, 4);
  fs::path dir = scratch("outputs");
  write_outputs(dir, c, trials);

  std::ifstream csv(dir / "summary.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "metric,n,mean,std_error,min,max");

  MetricsSet m = MetricsSet::load(dir);
  REQUIRE(m.trials.size() == 120);
  for (std::size_t i = 0; i < trials.size(); ++i)
    CHECK(m.trials[i].to_json().dump() == trials[i].to_json().dump());
  VerifyReport all = verify_metrics(m, "all");
  CHECK(all.checks.size() == 5);
  CHECK(all.passed);

  m.summary += "designer_loss,1,0,0,0,0\n";
  CHECK_FALSE(verify_metrics(m, "summary").passed);
  CHECK(code_of([&] { verify_metrics(m, "vibes"); }) == Errc::kInvalidParameter);
  CHECK(code_of([&] { MetricsSet::load(scratch("missing")); }) == Errc::kIo);
  fs::remove_all(dir);
}

TEST_CASE("adaptive trials") {
  json j = mixed_config();
  j["adaptive"] = {{"enabled", true}, {"stage_override", 16}, {"max_stages", 3}};
  j["arrivals"] = {{"slots", 3 * (16 + 64 + 128)}};
  j["seeds"] = {{"first", 0}, {"last", 9}};
  RunConfig c = RunConfig::from_json(j);
  json res = resolved_parameters(c);
  CHECK(res["stages"].size() == 3);
  for (const TrialMetrics& m : run_trials(c, 2)) {
    CHECK(m.stages_run >= 1);
    CHECK(m.designer_loss == doctest::Approx(m.mm_loss + m.ntl - m.fees).epsilon(1e-12));
  }
  j["market"]["lambda"] = 0.001;
  CHECK(code_of([&] { RunConfig::from_json(j); }) == Errc::kConfig);
}

TEST_CASE("privacy audit") {
  PrivacyAuditReport r = privacy_audit(8, 2, 1.0, 2000, 1);
  CHECK(r.max_participation == 4);
  CHECK(r.participation_bound == 4);
  CHECK(r.implied_epsilon_multiplier == doctest::Approx(4.0 / 3.0));
  CHECK(r.participation_counts == std::vector<std::uint64_t>{4, 3, 3, 2, 3, 2, 2, 1});
  CHECK(r.max_partial_sum_change <= 2.0 + 1e-12);
  CHECK(r.max_partial_sum_change > 1.5);
  CHECK(r.sensitivity_violations == 0);
  CHECK(r.passed);
  CHECK(privacy_audit(16, 1, 1.0, 10).configured_noise_scale == 8.0);
  CHECK(code_of([] { privacy_audit((1 << 14) + 1, 1, 1.0); }) == Errc::kInvalidParameter);
}

TEST_CASE("schedule report") {
  json r = schedule_report(stage_schedule(std::log(2.0), 1, 0.1, 0.1, 1, 20), 20);
  CHECK(r["stages"].size() == 20);
  CHECK(r["inequalities"]["all_pass"].get<bool>());
  CHECK(r["first_horizon_closed_form"].get<double>() > r["first_horizon_formula"].get<double>());
}
