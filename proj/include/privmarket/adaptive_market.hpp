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

#ifndef PRIVMARKET_ADAPTIVE_MARKET_HPP_
#define PRIVMARKET_ADAPTIVE_MARKET_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "privmarket/cost_function.hpp"
#include "privmarket/fee_market.hpp"
#include "privmarket/rng.hpp"
#include "privmarket/traders.hpp"

namespace privmarket {

// Smallest T covered by the bound T >= A (ln(T D))^2 for A, D >= 1, AD >= 5:
// 9 A (ln(A D))^2.
double minimal_T(double A, double D);

struct StageParams {
  unsigned k = 1;
  double horizon = 0.0;  // T^(k), integer valued
  double alpha = 0.0;    // alpha / 2^k
  double gamma = 0.0;    // gamma / 2^k
  double lambda = 0.0;   // lambda*(T^(k), alpha^(k), gamma^(k))
};

struct StageSchedule {
  double B1 = 0.0;
  std::size_t d = 1;
  double alpha = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;

  double A_prime = 0.0;  // B1 8 sqrt(2) d / (alpha epsilon)
  double A = 0.0;        // 16 A' / alpha
  double D = 0.0;        // 4 d / gamma
  // ceil(9 A (ln A D)^2), the first-stage horizon from the constants above.
  double first_horizon_formula = 0.0;
  // The same quantity written with 4608 inside the logarithm, as printed in
  // the closed form; reported for comparison only.
  double first_horizon_closed_form = 0.0;
  bool overridden = false;
  double growth = 4.0;

  std::vector<StageParams> stages;
};

// Builds stages 1..max_stages. With `first_horizon`, T^(1) is replaced for
// desk-scale runs; `growth` is the stage-to-stage horizon factor (4 in the
// construction).
StageSchedule stage_schedule(double B1, std::size_t d, double alpha, double gamma,
                             double epsilon, unsigned max_stages,
                             std::optional<double> first_horizon = std::nullopt,
                             double growth = 4.0);

// B1 (72 sqrt(2) d / (alpha eps)) (ln(4608 B1 sqrt(2) d^2 / (gamma alpha^2 eps)))^2.
double budget_bound(double B1, std::size_t d, double alpha, double gamma, double epsilon);

struct StageCheck {
  unsigned k = 0;
  // (a) B1 / lambda^(k) <= (alpha / 16) T^(k)
  double loss = 0.0;
  double loss_cap = 0.0;
  bool loss_ok = false;
  // (b) 1 - log2 T / (4 2^k sqrt(d) ln(2 d T 2^k / gamma)) - 1/16 >= 1/2
  double profit_bracket = 0.0;
  bool profit_ok = false;
  // lambda^(k-1) / lambda^(k) <= 4 (k >= 2), the growth step of the proof.
  double lambda_ratio = 0.0;
  bool lambda_ratio_ok = true;
};

struct StageInequalityReport {
  std::vector<StageCheck> stages;
  // (c) log2 T^(1) / (8 ln(4 T^(1))) <= 1/4
  double first_stage_ratio = 0.0;
  bool first_stage_ok = false;
  // Smallest k from which the lambda growth step holds for every later k.
  std::optional<unsigned> lambda_ratio_holds_from;
  bool all_pass = false;
};

StageInequalityReport verify_stage_inequalities(const StageSchedule& schedule, unsigned k_max);

// Opening state of the next stage: its prices match `previous_prices` after
// clamping at eta.
Shares transition(const Prices& previous_prices, double next_lambda, CostKind kind, double eta);

struct StageResult {
  unsigned k = 0;
  std::uint64_t arrivals = 0;
  bool completed = false;
  Ledger ledger;
  Shares opening_state;
  Prices handoff_prices;   // clamped prices the stage was asked to open at
  Prices opening_prices;   // prices actually published at open
  Prices final_prices;     // last published (noisy) prices
  double max_price_gap = 0.0;   // against this stage's true state
  double max_share_gap = 0.0;
};

struct AdaptiveOptions {
  CostKind kind = CostKind::kLmsr;
  bool noise_off = false;
  // Clamp margin for handoffs; defaults to alpha^(k+1) / (4d).
  std::optional<double> eta;
  // Fee per arrival; defaults to the schedule's alpha.
  std::optional<double> fee;
};

struct AdaptiveResult {
  Ledger global;
  std::vector<StageResult> stages;
  // max_t ||p_hat - p||_1 where p follows the same trades and handoffs with
  // no noise at all.
  double max_global_price_gap = 0.0;
  double max_share_gap = 0.0;
  std::uint64_t arrivals = 0;
  std::vector<TraderAccount> accounts;
};

// Runs stage after stage over the arrival stream: `arrivals[i]` names the
// roster entry offered arrival slot i. Abstentions consume no step. A stage
// completes after T^(k) arrivals and hands its noisy prices to the next; the
// stage in progress when the stream ends is the final one.
AdaptiveResult run_adaptive(const StageSchedule& schedule,
                            std::span<const std::unique_ptr<Strategy>> roster,
                            std::span<const std::size_t> arrivals, const OutcomeModel& outcomes,
                            std::size_t outcome, RngStream noise_stream,
                            const AdaptiveOptions& options = {});

}  // namespace privmarket

#endif  // PRIVMARKET_ADAPTIVE_MARKET_HPP_
