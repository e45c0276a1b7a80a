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

#ifndef PRIVMARKET_TRADERS_HPP_
#define PRIVMARKET_TRADERS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "privmarket/cost_function.hpp"
#include "privmarket/fee_market.hpp"
#include "privmarket/rng.hpp"
#include "privmarket/vector.hpp"

namespace privmarket {

// Everything a trader may condition on: published data and its own history.
// Deliberately carries no true state and no noise.
struct StrategyContext {
  std::uint64_t t = 1;                        // index of this arrival
  std::span<const Shares> own_trades;         // this trader's earlier bundles
  std::span<const Shares> published_states;   // q_hat^0 .. q_hat^(t-1)
  std::span<const Prices> published_prices;   // p_hat^0 .. p_hat^(t-1)
  double fee = 0.0;
  double lambda = 1.0;
  std::size_t d = 2;
  CostKind kind = CostKind::kLmsr;

  const Shares& current_state() const { return published_states.back(); }
  const Prices& current_prices() const { return published_prices.back(); }
  ScaledCost cost_function() const { return ScaledCost(d, lambda, kind); }
};

StrategyContext make_context(const MarketSession& session, std::span<const Shares> own_trades);

struct TradeDecision {
  std::optional<Shares> bundle;  // nullopt = abstain
  double expected_profit = 0.0;  // before the fee, under the trader's belief
};

// Best signed unit-coordinate trade against the published state, refined by
// a line search over the step length along the winning direction. Trades only
// if the expected profit exceeds the fee. Ties go to the lowest coordinate,
// buying before selling.
TradeDecision best_response(const StrategyContext& ctx, const Prices& belief);

enum class StrategyKind { kBelief, kArbitrageHunter, kHerd, kRandom, kAbstainer };

std::string_view strategy_kind_name(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view name);

struct StrategyParams {
  std::optional<Prices> belief;     // belief, arbitrage_hunter
  std::optional<double> threshold;  // arbitrage_hunter; defaults to the fee
  std::size_t coordinate = 0;       // herd
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual StrategyKind kind() const = 0;
  virtual TradeDecision decide(const StrategyContext& ctx) = 0;
  // Subjective expectation of phi(Z), when the strategy has one.
  virtual const Prices* belief() const { return nullptr; }
};

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, const StrategyParams& params,
                                        RngStream rng, std::size_t d);

// Runs the strategy and enforces the trade-size cap on what it returns.
TradeDecision step_strategy(Strategy& strategy, const StrategyContext& ctx);

// A trader's holdings and cash across every market it traded in.
struct TraderAccount {
  std::vector<Shares> trades;
  Shares position;
  double payments = 0.0;
  double fees = 0.0;
  std::uint64_t arrivals = 0;
};

// Offers arrival slots first_slot, first_slot+1, ... to the roster entries
// named by `arrivals` until the stream ends or the session fills up.
// Abstentions consume a slot but no market step. Returns the next unused
// slot.
std::size_t drive_arrivals(MarketSession& session,
                           std::span<const std::unique_ptr<Strategy>> roster,
                           std::span<const std::size_t> arrivals, std::size_t first_slot,
                           std::vector<TraderAccount>& accounts,
                           const std::function<void(const StepRecord&)>& on_step = {});

}  // namespace privmarket

#endif  // PRIVMARKET_TRADERS_HPP_
