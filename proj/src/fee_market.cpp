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

#include "privmarket/fee_market.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "privmarket/error.hpp"

namespace privmarket {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

bool is_integer_valued(double x) { return std::isfinite(x) && std::floor(x) == x; }

double tolerance_for(double scale) { return 1e-9 * (1.0 + std::abs(scale)); }

}  // namespace

double ceil_log2_real(double T) {
  require(is_integer_valued(T) && T >= 1.0, Errc::kInvalidParameter,
          "ceil_log2 needs an integer T >= 1");
  int exponent = 0;
  const double mantissa = std::frexp(T, &exponent);  // T = mantissa * 2^exponent
  return mantissa == 0.5 ? static_cast<double>(exponent - 1) : static_cast<double>(exponent);
}

double lambda_star(double T, double alpha, double gamma, double epsilon, std::size_t d) {
  require(is_integer_valued(T) && T >= 2.0, Errc::kInvalidParameter,
          "lambda_star needs an integer T >= 2");
  require(alpha > 0.0 && alpha < 1.0, Errc::kInvalidParameter, "alpha must lie in (0, 1)");
  require(gamma > 0.0 && gamma < 1.0, Errc::kInvalidParameter, "gamma must lie in (0, 1)");
  require(epsilon > 0.0, Errc::kInvalidParameter, "epsilon must be positive");
  require(d >= 1, Errc::kInvalidParameter, "d must be positive");
  const double dd = static_cast<double>(d);
  return alpha * epsilon /
         (4.0 * kSqrt2 * dd * ceil_log2_real(T) * std::log(2.0 * T * dd / gamma));
}

double noise_scale_K(std::uint64_t T, double epsilon, std::size_t d) {
  require(T >= 1 && epsilon > 0.0 && d >= 1, Errc::kInvalidParameter,
          "noise_scale_K needs positive T, epsilon, d");
  return 2.0 * std::sqrt(2.0 * static_cast<double>(d)) * static_cast<double>(tree_depth(T)) /
         epsilon;
}

double share_accuracy_bound(double T, std::size_t d, double epsilon, double gamma) {
  require(epsilon > 0.0 && gamma > 0.0 && gamma < 1.0 && d >= 1, Errc::kInvalidParameter,
          "share_accuracy_bound parameters out of range");
  const double dd = static_cast<double>(d);
  return 4.0 * kSqrt2 * dd * std::max(ceil_log2_real(T), 1.0) / epsilon *
         std::log(2.0 * T * dd / gamma);
}

double MarketParams::resolved_lambda() const {
  if (lambda) return *lambda;
  return lambda_star(static_cast<double>(T), alpha, gamma, epsilon, d);
}

void MarketParams::validate() const {
  require(d >= 1, Errc::kInvalidParameter, "d must be positive");
  require(epsilon > 0.0, Errc::kInvalidParameter, "epsilon must be positive");
  require(alpha > 0.0 && alpha < 1.0, Errc::kInvalidParameter, "alpha must lie in (0, 1)");
  require(gamma > 0.0 && gamma < 1.0, Errc::kInvalidParameter, "gamma must lie in (0, 1)");
  require(T >= 2, Errc::kInvalidParameter, "T must be at least 2");
  if (fee) require(*fee >= 0.0 && std::isfinite(*fee), Errc::kInvalidParameter,
                   "fee must be non-negative");
  const double lam = resolved_lambda();
  if (!(lam > 0.0 && lam <= 1.0))
    fail(Errc::kInvalidParameter, "lambda must lie in (0, 1], got " + std::to_string(lam));
  if (allow_unsafe_lambda) return;
  const double cap = lambda_star(static_cast<double>(T), alpha, gamma, epsilon, d);
  if (lam > cap * (1.0 + 1e-12))
    fail(Errc::kInvalidParameter, "lambda " + std::to_string(lam) + " exceeds lambda* = " +
                                      std::to_string(cap) + " (set allow_unsafe_lambda)");
  if (!(lam < alpha))
    fail(Errc::kInvalidParameter, "lambda must be below alpha (set allow_unsafe_lambda)");
}

Ledger& Ledger::operator+=(const Ledger& o) {
  mm_loss += o.mm_loss;
  ntl += o.ntl;
  fees += o.fees;
  designer_loss += o.designer_loss;
  participant_payments += o.participant_payments;
  participant_payouts += o.participant_payouts;
  arrivals += o.arrivals;
  return *this;
}

MarketSession::MarketSession(const MarketParams& params, ScaledCost cost, NoiseLedger noise,
                             Shares initial)
    : params_(params),
      cost_(cost),
      fee_(params.resolved_fee()),
      noise_(std::move(noise)),
      q_true_(initial),
      q_hat_(initial) {
  published_.push_back(initial);
  published_prices_.push_back(prices(cost_, initial));
  published_.reserve(params.T + 1);
  published_prices_.reserve(params.T + 1);
  trace_.reserve(params.T);
}

MarketSession MarketSession::open(const MarketParams& params, CostKind kind,
                                  RngStream noise_stream, std::optional<Shares> initial_state) {
  params.validate();
  ScaledCost cost(params.d, params.resolved_lambda(), kind);
  Shares initial = initial_state.value_or(Shares(params.d));
  require(initial.size() == params.d, Errc::kInvalidParameter,
          "initial state has the wrong dimension");
  require(all_finite(initial.view()), Errc::kInvalidParameter, "initial state is not finite");
  NoiseLedger noise(params.d, noise_scale(params.T, params.epsilon), std::move(noise_stream),
                    params.noise_off);
  return MarketSession(params, cost, std::move(noise), std::move(initial));
}

MarketSession MarketSession::open(const MarketParams& params, CostKind kind, std::uint64_t seed,
                                  std::optional<Shares> initial_state) {
  return open(params, kind, RngStream(seed), std::move(initial_state));
}

const StepRecord& MarketSession::step(const Shares& dq) {
  if (closed_) fail(Errc::kMarketClosed, "market already closed");
  if (full())
    fail(Errc::kMarketClosed, "market is full after " + std::to_string(params_.T) + " arrivals");
  if (dq.size() != params_.d || !all_finite(dq.view()))
    fail(Errc::kTradeRejected, "trade bundle has the wrong dimension or is not finite");
  const double size = l1_norm(dq.view());
  if (size > 1.0 + 1e-12)
    fail(Errc::kTradeRejected, "trade bundle has l1 norm " + std::to_string(size) + " > 1");

  StepRecord rec;
  rec.t = t_ + 1;
  rec.dq = dq;
  rec.fee = fee_;
  rec.payment = trade_cost(cost_, q_hat_, dq);
  participant_payments_ += rec.payment;

  Shares x = q_hat_ + dq;
  const NoiseLedger::StepActions actions = noise_.advance([&](const Shares& delta) {
    const double charge = trade_cost(cost_, x, delta);
    x += delta;
    return charge;
  });
  rec.noise_sold = actions.sold;
  rec.noise_charge = actions.charged;

  t_ = rec.t;
  q_true_ += dq;
  q_hat_ = std::move(x);

  // q_hat - q must equal the held noise.
  const Shares held = noise_.held_sum();
  for (std::size_t j = 0; j < params_.d; ++j) {
    const double gap = q_hat_[j] - q_true_[j];
    if (std::abs(gap - held[j]) > tolerance_for(std::abs(q_hat_[j]) + std::abs(held[j])))
      fail(Errc::kInvalidState, "published state drifted from true state plus held noise");
  }

  rec.q_true = q_true_;
  rec.q_hat = q_hat_;
  rec.p_true = prices(cost_, q_true_);
  rec.p_hat = prices(cost_, q_hat_);
  max_price_gap_ = std::max(max_price_gap_, l1_distance(rec.p_true, rec.p_hat));
  max_share_gap_ = std::max(max_share_gap_, l1_distance(rec.q_true, rec.q_hat));

  published_.push_back(q_hat_);
  published_prices_.push_back(rec.p_hat);
  trace_.push_back(std::move(rec));
  return trace_.back();
}

Ledger MarketSession::close(const OutcomeModel& outcomes, std::size_t outcome) {
  if (closed_) fail(Errc::kInvalidState, "market already closed");
  require(outcomes.securities() == params_.d, Errc::kInvalidParameter,
          "outcome model dimension does not match the market");
  const std::vector<double>& payoff = outcomes.payoff(outcome);

  const Shares residual = noise_.held_sum();
  const double batch = cost(cost_, q_hat_ - residual) - cost(cost_, q_hat_);
  Shares x = q_hat_;
  const NoiseLedger::StepActions actions = noise_.close_out([&](const Shares& delta) {
    const double charge = trade_cost(cost_, x, delta);
    x += delta;
    return charge;
  });
  if (std::abs(actions.charged - batch) > tolerance_for(cost(cost_, q_hat_)))
    fail(Errc::kInvalidState, "sequential sell-back does not telescope to the batch sale");
  q_hat_ = std::move(x);
  closed_ = true;

  double noise_payments = 0.0;
  for (const NoiseBundle& b : noise_.bundles()) noise_payments += b.realized_loss();

  Ledger ledger;
  ledger.arrivals = t_;
  ledger.participant_payments = participant_payments_;
  ledger.participant_payouts = dot((q_true_ - initial_state()).view(), payoff);
  ledger.fees = fee_ * static_cast<double>(t_);
  ledger.ntl = noise_payments;
  ledger.mm_loss = ledger.participant_payouts - ledger.participant_payments - noise_payments;
  ledger.designer_loss = ledger.mm_loss + ledger.ntl - ledger.fees;
  return ledger;
}

LossBounds loss_bounds(const LossBoundInputs& in) {
  require(in.lambda > 0.0 && in.K >= 0.0 && in.fee >= 0.0 && in.B1 >= 0.0,
          Errc::kInvalidParameter, "loss_bounds inputs must be non-negative, lambda positive");
  LossBounds out;
  const double tp = static_cast<double>(in.T_prime);
  const double log_tp = in.T_prime > 0 ? std::log2(tp) : 0.0;
  out.ntl_bound = tp * log_tp / 2.0 * in.lambda * in.K;
  out.ntl_bound_exact =
      in.lambda * in.K * static_cast<double>(bundle_exposure_sum(in.T_prime));
  out.ntl_bound_low_bit_sum = in.lambda * in.K * static_cast<double>(low_bit_sum(in.T_prime));
  out.wc_bound = in.B1 / in.lambda + tp * (in.K * log_tp * in.lambda - in.fee);
  if (in.T >= 2) {
    const double T = static_cast<double>(in.T);
    out.fee_condition_lambda =
        in.fee * in.epsilon /
        (2.0 * std::sqrt(2.0 * static_cast<double>(in.d)) * ceil_log2_real(T) * std::log2(T));
    out.fee_condition_holds = in.lambda <= out.fee_condition_lambda * (1.0 + 1e-12);
  }
  return out;
}

}  // namespace privmarket
