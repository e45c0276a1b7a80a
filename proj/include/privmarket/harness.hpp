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

#ifndef PRIVMARKET_HARNESS_HPP_
#define PRIVMARKET_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "privmarket/adaptive_market.hpp"
#include "privmarket/cost_function.hpp"
#include "privmarket/fee_market.hpp"
#include "privmarket/traders.hpp"

namespace privmarket {

using nlohmann::json;

struct TraderSpec {
  StrategyKind kind = StrategyKind::kAbstainer;
  StrategyParams params;
  std::size_t count = 1;
};

enum class ArrivalOrder { kRoundRobin, kShuffled };

struct AdaptiveConfig {
  bool enabled = false;
  std::optional<std::uint64_t> stage_override;
  std::uint64_t stage_growth = 4;
  unsigned max_stages = 3;
  std::optional<double> eta;
};

struct OutcomeRule {
  std::optional<std::size_t> fixed;
  std::optional<std::vector<double>> distribution;
};

struct RunConfig {
  MarketParams market;
  CostKind cost = CostKind::kLmsr;
  std::optional<double> lambda_multiplier;
  AdaptiveConfig adaptive;
  std::vector<TraderSpec> traders;
  ArrivalOrder order = ArrivalOrder::kRoundRobin;
  std::optional<std::uint64_t> slots;
  OutcomeRule outcome;
  std::uint64_t seed_first = 0;
  std::uint64_t seed_last = 99;
  std::string output_dir;

  // Strict parse: unknown fields and type mismatches raise Errc::kConfig with
  // the offending field path.
  static RunConfig from_json(const json& j);
  static RunConfig load(const std::filesystem::path& path);
  json to_json() const;

  // Market parameters with the lambda multiplier applied.
  MarketParams effective_market() const;
  // Schedule used by adaptive runs.
  StageSchedule schedule() const;
  std::size_t roster_size() const;
  std::uint64_t resolved_slots() const;
  void validate() const;
};

struct TrialMetrics {
  std::uint64_t seed = 0;
  std::size_t outcome = 0;
  double designer_loss = 0.0;
  double mm_loss = 0.0;
  double ntl = 0.0;
  double fees = 0.0;
  double participant_payments = 0.0;
  double participant_payouts = 0.0;
  double max_price_gap = 0.0;
  double max_share_gap = 0.0;
  std::uint64_t arrivals = 0;
  unsigned stages_completed = 0;
  unsigned stages_run = 0;
  double k_empirical = 0.0;  // mean ||z||_2 over this trial's noise bundles
  std::uint64_t bundles = 0;
  std::vector<double> trader_profit;  // realized, per roster entry
  // Expected profit under the trader's own belief; null without a belief.
  std::vector<std::optional<double>> trader_belief_profit;

  json to_json() const;
  static TrialMetrics from_json(const json& j);
};

TrialMetrics run_trial(const RunConfig& config, std::uint64_t seed);

// Runs every seed in [seed_first, seed_last], spreading seeds over
// `parallel` threads. Rows come back in seed order.
std::vector<TrialMetrics> run_trials(const RunConfig& config, unsigned parallel = 1);

// Parameters the verifiers need, resolved from a config.
json resolved_parameters(const RunConfig& config);

// Writes run.json, trials.jsonl and summary.csv into `dir`.
void write_outputs(const std::filesystem::path& dir, const RunConfig& config,
                   std::span<const TrialMetrics> trials);

std::string summary_csv(std::span<const TrialMetrics> trials, const json& resolved);

struct MetricsSet {
  json run;
  std::vector<TrialMetrics> trials;
  std::string summary;

  static MetricsSet load(const std::filesystem::path& dir);
};

struct CheckReport {
  std::string name;
  bool passed = false;
  std::size_t n = 0;
  double statistic = 0.0;  // observed mean or exceedance fraction
  double threshold = 0.0;  // bound the statistic is held to before tolerance
  double tolerance = 0.0;  // 3 standard errors
  double margin = 0.0;     // threshold + tolerance - statistic
  json detail = json::object();

  json to_json() const;
};

inline constexpr std::size_t kMinVerifierSeeds = 100;

CheckReport verify_precision(std::span<const TrialMetrics> trials, double alpha, double gamma);
// Mean designer loss against `bound` (B1 / lambda for a single market).
CheckReport verify_budget(std::span<const TrialMetrics> trials, double bound);
CheckReport verify_share_accuracy(std::span<const TrialMetrics> trials, std::size_t d, double T,
                                  double epsilon, double gamma);
// Mean noise-trader loss against (T' log2 T' / 2) lambda K, with K pooled
// from the bundles the trials actually drew.
CheckReport verify_noise_loss(std::span<const TrialMetrics> trials, double lambda);

struct VerifyReport {
  std::vector<CheckReport> checks;
  bool passed = false;
  json to_json() const;
};

// check: precision | budget | shares | noise_loss | summary | all
VerifyReport verify_metrics(const MetricsSet& metrics, const std::string& check);

struct PrivacyAuditReport {
  std::uint64_t T = 0;
  std::size_t d = 0;
  double epsilon = 0.0;
  std::size_t pairs = 0;
  double max_partial_sum_change = 0.0;
  std::size_t sensitivity_violations = 0;
  std::vector<std::uint64_t> participation_counts;  // index t' - 1
  std::uint64_t max_participation = 0;
  std::uint64_t participation_bound = 0;  // floor(log2 T) + 1
  std::size_t participation_mismatches = 0;
  std::uint64_t tree_depth = 0;            // ceil(log2 T)
  double implied_epsilon_multiplier = 0.0;  // max_participation / ceil(log2 T)
  double configured_noise_scale = 0.0;
  double expected_noise_scale = 0.0;
  bool passed = false;

  json to_json() const;
};

PrivacyAuditReport privacy_audit(std::uint64_t T, std::size_t d, double epsilon,
                                 std::size_t pairs = 10000, std::uint64_t seed = 0);

json schedule_report(const StageSchedule& schedule, unsigned k_max);

}  // namespace privmarket

#endif  // PRIVMARKET_HARNESS_HPP_
