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

#ifndef PRIVMARKET_FEE_MARKET_HPP_
#define PRIVMARKET_FEE_MARKET_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "privmarket/cost_function.hpp"
#include "privmarket/noise_schedule.hpp"
#include "privmarket/rng.hpp"
#include "privmarket/vector.hpp"

namespace privmarket {

// Largest price sensitivity for which published prices stay within l1
// distance alpha of the true prices at every step with probability 1-gamma:
//   alpha * epsilon / (4 sqrt(2) d ceil(log2 T) ln(2 T d / gamma)).
// T is integer valued but may exceed 2^64 for theoretical stage schedules.
double lambda_star(double T, double alpha, double gamma, double epsilon, std::size_t d);

// ceil(log2 T) for an integer-valued T >= 1 held in a double.
double ceil_log2_real(double T);

// Analytic upper bound on K = E ||z||_2: 2 sqrt(2d) ceil(log2 T) / epsilon.
double noise_scale_K(std::uint64_t T, double epsilon, std::size_t d);

// Bound on max_t ||q^t - q_hat^t||_1 holding with probability 1 - gamma:
//   (4 sqrt(2) d ceil(log2 T) / epsilon) ln(2 T d / gamma).
double share_accuracy_bound(double T, std::size_t d, double epsilon, double gamma);

struct MarketParams {
  std::size_t d = 2;
  double epsilon = 1.0;
  double alpha = 0.1;
  double gamma = 0.1;
  std::uint64_t T = 16;
  std::optional<double> fee;     // defaults to alpha
  std::optional<double> lambda;  // defaults to lambda_star
  bool noise_off = false;
  // Permits lambda above lambda_star (or not below alpha) for experiments
  // outside the guarantee.
  bool allow_unsafe_lambda = false;

  double resolved_fee() const { return fee.value_or(alpha); }
  double resolved_lambda() const;
  void validate() const;
};

struct StepRecord {
  std::uint64_t t = 0;
  Shares dq;
  double payment = 0.0;
  double fee = 0.0;
  std::vector<std::uint64_t> noise_sold;
  double noise_charge = 0.0;
  Shares q_true;
  Shares q_hat;
  Prices p_true;
  Prices p_hat;
};

// Designer accounting. mm_loss is the market maker's loss against every
// counterparty (participants and noise trader); ntl is the noise trader's net
// payments, which she loses because she ends flat; fees is the fee revenue.
struct Ledger {
  double mm_loss = 0.0;
  double ntl = 0.0;
  double fees = 0.0;
  double designer_loss = 0.0;

  double participant_payments = 0.0;
  double participant_payouts = 0.0;
  std::uint64_t arrivals = 0;

  Ledger& operator+=(const Ledger& o);
};

class MarketSession {
 public:
  // Fresh market at q = q_hat = initial_state (zero when absent).
  static MarketSession open(const MarketParams& params, CostKind kind, RngStream noise_stream,
                            std::optional<Shares> initial_state = std::nullopt);
  static MarketSession open(const MarketParams& params, CostKind kind, std::uint64_t seed,
                            std::optional<Shares> initial_state = std::nullopt);

  // One arrival: fee, trade at the published state, then the noise trade.
  const StepRecord& step(const Shares& dq);

  // Sells back the remaining noise in reverse purchase order and settles the
  // participants against `outcome`.
  Ledger close(const OutcomeModel& outcomes, std::size_t outcome);

  const MarketParams& params() const noexcept { return params_; }
  const ScaledCost& cost_function() const noexcept { return cost_; }
  double fee() const noexcept { return fee_; }
  std::uint64_t arrivals() const noexcept { return t_; }
  std::uint64_t capacity() const noexcept { return params_.T; }
  bool full() const noexcept { return t_ >= params_.T; }
  bool closed() const noexcept { return closed_; }

  const Shares& initial_state() const noexcept { return published_.front(); }
  const Shares& q_true() const noexcept { return q_true_; }
  const Shares& q_hat() const noexcept { return q_hat_; }
  Prices published_prices() const { return published_prices_.back(); }

  std::span<const Shares> published_states() const noexcept { return published_; }
  std::span<const Prices> published_price_history() const noexcept { return published_prices_; }
  std::span<const StepRecord> trace() const noexcept { return trace_; }
  const NoiseLedger& noise() const noexcept { return noise_; }

  double max_price_gap() const noexcept { return max_price_gap_; }
  double max_share_gap() const noexcept { return max_share_gap_; }

 private:
  MarketSession(const MarketParams& params, ScaledCost cost, NoiseLedger noise, Shares initial);

  MarketParams params_;
  ScaledCost cost_;
  double fee_;
  NoiseLedger noise_;
  Shares q_true_;
  Shares q_hat_;
  std::uint64_t t_ = 0;
  bool closed_ = false;
  double participant_payments_ = 0.0;
  double max_price_gap_ = 0.0;
  double max_share_gap_ = 0.0;
  std::vector<Shares> published_;
  std::vector<Prices> published_prices_;
  std::vector<StepRecord> trace_;
};

struct LossBoundInputs {
  double lambda = 0.0;
  std::uint64_t T_prime = 0;
  double K = 0.0;
  double fee = 0.0;
  double B1 = 0.0;
  // Used only for the sufficient-fee condition.
  std::uint64_t T = 0;
  double epsilon = 1.0;
  std::size_t d = 1;
};

struct LossBounds {
  // (T' log2 T' / 2) * lambda * K, the per-level tally.
  double ntl_bound = 0.0;
  // lambda * K * sum_t min(low_bit(t), T' - t), exact for any T'.
  double ntl_bound_exact = 0.0;
  // lambda * K * sum_{t <= T'} low_bit(t), every bundle held its full span.
  double ntl_bound_low_bit_sum = 0.0;
  // B1 / lambda + T' (K log2 T' lambda - c).
  double wc_bound = 0.0;
  // c epsilon / (2 sqrt(2d) ceil(log2 T) log2 T).
  double fee_condition_lambda = 0.0;
  bool fee_condition_holds = false;
};

LossBounds loss_bounds(const LossBoundInputs& in);

}  // namespace privmarket

#endif  // PRIVMARKET_FEE_MARKET_HPP_
