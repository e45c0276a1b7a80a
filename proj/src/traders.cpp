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

#include "privmarket/traders.hpp"

#include <cmath>
#include <string>

#include "privmarket/error.hpp"

namespace privmarket {

namespace {

// Expected profit of buying step * sign * e_j at state q under belief p,
// ignoring the fee.
double coordinate_profit(const ScaledCost& c, const Shares& q, const Prices& belief,
                         std::size_t j, double sign, double step) {
  const Shares dq = unit_shares(c.d(), j, sign * step);
  return sign * step * belief[j] - trade_cost(c, q, dq);
}

void check_belief(const Prices& belief, std::size_t d) {
  require(belief.size() == d, Errc::kInvalidParameter, "belief has the wrong dimension");
  double total = 0.0;
  for (double x : belief) {
    require(x >= 0.0 && x <= 1.0, Errc::kInvalidParameter, "belief coordinates must be in [0,1]");
    total += x;
  }
  require(std::abs(total - 1.0) <= 1e-9, Errc::kInvalidParameter, "belief must sum to 1");
}

class BeliefTrader final : public Strategy {
 public:
  explicit BeliefTrader(Prices belief) : belief_(std::move(belief)) {}
  StrategyKind kind() const override { return StrategyKind::kBelief; }
  TradeDecision decide(const StrategyContext& ctx) override { return best_response(ctx, belief_); }
  const Prices* belief() const override { return &belief_; }

 private:
  Prices belief_;
};

class ArbitrageHunter final : public Strategy {
 public:
  ArbitrageHunter(Prices belief, std::optional<double> threshold)
      : belief_(std::move(belief)), threshold_(threshold) {}
  StrategyKind kind() const override { return StrategyKind::kArbitrageHunter; }
  const Prices* belief() const override { return &belief_; }

  TradeDecision decide(const StrategyContext& ctx) override {
    const Prices& p = ctx.current_prices();
    std::size_t best = 0;
    double deviation = -1.0;
    for (std::size_t j = 0; j < ctx.d; ++j) {
      const double dev = std::abs(belief_[j] - p[j]);
      if (dev > deviation) {
        deviation = dev;
        best = j;
      }
    }
    TradeDecision out;
    if (deviation <= threshold_.value_or(ctx.fee)) return out;
    const double sign = p[best] < belief_[best] ? 1.0 : -1.0;
    Shares dq = unit_shares(ctx.d, best, sign);
    out.expected_profit = sign * belief_[best] - trade_cost(ctx.cost_function(), ctx.current_state(), dq);
    out.bundle = std::move(dq);
    return out;
  }

 private:
  Prices belief_;
  std::optional<double> threshold_;
};

class HerdTrader final : public Strategy {
 public:
  explicit HerdTrader(std::size_t coordinate) : coordinate_(coordinate) {}
  StrategyKind kind() const override { return StrategyKind::kHerd; }
  TradeDecision decide(const StrategyContext& ctx) override {
    TradeDecision out;
    out.bundle = unit_shares(ctx.d, coordinate_);
    return out;
  }

 private:
  std::size_t coordinate_;
};

class RandomTrader final : public Strategy {
 public:
  explicit RandomTrader(RngStream rng) : rng_(std::move(rng)) {}
  StrategyKind kind() const override { return StrategyKind::kRandom; }
  TradeDecision decide(const StrategyContext& ctx) override {
    const auto j = static_cast<std::size_t>(rng_.below(ctx.d));
    const double sign = rng_.uniform() < 0.5 ? -1.0 : 1.0;
    TradeDecision out;
    out.bundle = unit_shares(ctx.d, j, sign);
    return out;
  }

 private:
  RngStream rng_;
};

class Abstainer final : public Strategy {
 public:
  StrategyKind kind() const override { return StrategyKind::kAbstainer; }
  TradeDecision decide(const StrategyContext&) override { return {}; }
};

}  // namespace

StrategyContext make_context(const MarketSession& session, std::span<const Shares> own_trades) {
  StrategyContext ctx;
  ctx.t = session.arrivals() + 1;
  ctx.own_trades = own_trades;
  ctx.published_states = session.published_states();
  ctx.published_prices = session.published_price_history();
  ctx.fee = session.fee();
  ctx.lambda = session.cost_function().lambda();
  ctx.d = session.cost_function().d();
  ctx.kind = session.cost_function().kind();
  return ctx;
}

TradeDecision best_response(const StrategyContext& ctx, const Prices& belief) {
  check_belief(belief, ctx.d);
  const ScaledCost c = ctx.cost_function();
  const Shares& q = ctx.current_state();

  std::size_t best_j = 0;
  double best_sign = 1.0;
  double best = coordinate_profit(c, q, belief, 0, 1.0, 1.0);
  for (std::size_t j = 0; j < ctx.d; ++j) {
    for (double sign : {1.0, -1.0}) {
      const double profit = coordinate_profit(c, q, belief, j, sign, 1.0);
      if (profit > best + 1e-12 * (1.0 + std::abs(best))) {
        best = profit;
        best_j = j;
        best_sign = sign;
      }
    }
  }

  // Profit along the winning direction is concave in the step length.
  double lo = 0.0;
  double hi = 1.0;
  constexpr double kInvPhi = 0.6180339887498949;
  double a = hi - kInvPhi * (hi - lo);
  double b = lo + kInvPhi * (hi - lo);
  double fa = coordinate_profit(c, q, belief, best_j, best_sign, a);
  double fb = coordinate_profit(c, q, belief, best_j, best_sign, b);
  for (int it = 0; it < 80; ++it) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + kInvPhi * (hi - lo);
      fb = coordinate_profit(c, q, belief, best_j, best_sign, b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - kInvPhi * (hi - lo);
      fa = coordinate_profit(c, q, belief, best_j, best_sign, a);
    }
  }
  double step = 1.0;
  const double interior = 0.5 * (lo + hi);
  const double interior_profit = coordinate_profit(c, q, belief, best_j, best_sign, interior);
  if (interior_profit > best + 1e-12 * (1.0 + std::abs(best))) {
    best = interior_profit;
    step = interior;
  }

  TradeDecision out;
  out.expected_profit = best;
  if (best > ctx.fee) out.bundle = unit_shares(ctx.d, best_j, best_sign * step);
  return out;
}

std::string_view strategy_kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kBelief: return "belief";
    case StrategyKind::kArbitrageHunter: return "arbitrage_hunter";
    case StrategyKind::kHerd: return "herd";
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kAbstainer: return "abstainer";
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  for (StrategyKind k : {StrategyKind::kBelief, StrategyKind::kArbitrageHunter,
                         StrategyKind::kHerd, StrategyKind::kRandom, StrategyKind::kAbstainer})
    if (strategy_kind_name(k) == name) return k;
  fail(Errc::kInvalidParameter, "unknown strategy kind '" + std::string(name) + "'");
}

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, const StrategyParams& params,
                                        RngStream rng, std::size_t d) {
  require(d >= 1, Errc::kInvalidParameter, "strategy needs d >= 1");
  switch (kind) {
    case StrategyKind::kBelief: {
      if (!params.belief) fail(Errc::kInvalidParameter, "belief strategy needs a belief");
      check_belief(*params.belief, d);
      return std::make_unique<BeliefTrader>(*params.belief);
    }
    case StrategyKind::kArbitrageHunter: {
      Prices belief = params.belief.value_or(Prices(d, 1.0 / static_cast<double>(d)));
      check_belief(belief, d);
      if (params.threshold)
        require(*params.threshold >= 0.0, Errc::kInvalidParameter, "threshold must be >= 0");
      return std::make_unique<ArbitrageHunter>(std::move(belief), params.threshold);
    }
    case StrategyKind::kHerd:
      require(params.coordinate < d, Errc::kInvalidParameter, "herd coordinate out of range");
      return std::make_unique<HerdTrader>(params.coordinate);
    case StrategyKind::kRandom:
      return std::make_unique<RandomTrader>(std::move(rng));
    case StrategyKind::kAbstainer:
      return std::make_unique<Abstainer>();
  }
  fail(Errc::kInvalidParameter, "unknown strategy kind");
}

TradeDecision step_strategy(Strategy& strategy, const StrategyContext& ctx) {
  TradeDecision out = strategy.decide(ctx);
  if (out.bundle) {
    const Shares& dq = *out.bundle;
    if (dq.size() != ctx.d || !all_finite(dq.view()) || l1_norm(dq.view()) > 1.0 + 1e-12)
      fail(Errc::kStrategyBug, std::string(strategy_kind_name(strategy.kind())) +
                                   " strategy returned a bundle outside the unit l1 ball");
  }
  return out;
}

std::size_t drive_arrivals(MarketSession& session,
                           std::span<const std::unique_ptr<Strategy>> roster,
                           std::span<const std::size_t> arrivals, std::size_t first_slot,
                           std::vector<TraderAccount>& accounts,
                           const std::function<void(const StepRecord&)>& on_step) {
  require(accounts.size() == roster.size(), Errc::kInvalidParameter,
          "one account per roster entry required");
  std::size_t slot = first_slot;
  while (slot < arrivals.size() && !session.full()) {
    const std::size_t who = arrivals[slot++];
    require(who < roster.size(), Errc::kInvalidParameter, "arrival names an unknown trader");
    TraderAccount& account = accounts[who];
    if (account.position.empty()) account.position = Shares(session.params().d);
    const StrategyContext ctx = make_context(session, account.trades);
    TradeDecision decision = step_strategy(*roster[who], ctx);
    if (!decision.bundle) continue;
    const StepRecord& rec = session.step(*decision.bundle);
    account.position += rec.dq;
    account.payments += rec.payment;
    account.fees += rec.fee;
    ++account.arrivals;
    account.trades.push_back(std::move(*decision.bundle));
    if (on_step) on_step(rec);
  }
  return slot;
}

}  // namespace privmarket
