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

#ifndef PRIVMARKET_COST_FUNCTION_HPP_
#define PRIVMARKET_COST_FUNCTION_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "privmarket/vector.hpp"

namespace privmarket {

enum class CostKind {
  kLmsr,
};

std::string_view cost_kind_name(CostKind kind);
CostKind parse_cost_kind(std::string_view name);

// Outcome space and the security payoffs phi(z). Every payoff coordinate lies
// in [0, 1].
class OutcomeModel {
 public:
  // Complete market: outcome j pays one unit of security j.
  static OutcomeModel complete(std::size_t d);
  static OutcomeModel from_payoffs(std::vector<std::vector<double>> payoffs);

  std::size_t securities() const noexcept { return d_; }
  std::size_t outcomes() const noexcept { return payoffs_.size(); }
  const std::vector<double>& payoff(std::size_t outcome) const;

 private:
  OutcomeModel(std::size_t d, std::vector<std::vector<double>> payoffs)
      : d_(d), payoffs_(std::move(payoffs)) {}

  std::size_t d_;
  std::vector<std::vector<double>> payoffs_;
};

// Base cost C1 rescaled by the perspective transform,
//   C(q) = (1/lambda) * C1(lambda * q),
// which has price sensitivity lambda and worst-case loss B1 / lambda.
// For LMSR, C1(q) = ln sum_j exp(q_j) and B1 = ln d.
class ScaledCost {
 public:
  ScaledCost(std::size_t d, double lambda, CostKind kind = CostKind::kLmsr);

  std::size_t d() const noexcept { return d_; }
  double lambda() const noexcept { return lambda_; }
  CostKind kind() const noexcept { return kind_; }
  double base_loss() const noexcept { return base_loss_; }

 private:
  std::size_t d_;
  double lambda_;
  CostKind kind_;
  double base_loss_;
};

// Total money collected to reach state q. Stable for |q| up to 1e6.
double cost(const ScaledCost& c, const Shares& q);

// Instantaneous prices, the gradient of cost at q.
Prices prices(const ScaledCost& c, const Shares& q);

// Payment for moving the state from q to q + dq.
double trade_cost(const ScaledCost& c, const Shares& q, const Shares& dq);

// B1 / lambda.
double worst_case_loss(const ScaledCost& c);

// Maps p to the canonical state with prices(c, q) == clamp(p): coordinates
// below eta are raised to eta, the vector is renormalized, and the last share
// coordinate is pinned to zero.
Shares invert_prices(const ScaledCost& c, const Prices& p, double eta);

Prices clamp_prices(const Prices& p, double eta);

struct SensitivityEstimate {
  // max ||prices(q+u) - prices(q)||_1 over sampled q and ||u||_1 = 1.
  double l1 = 0.0;
  // max ||prices(q+u) - prices(q)||_2 / ||u||_2 over the same samples.
  double l2 = 0.0;
};

SensitivityEstimate numeric_sensitivity(const ScaledCost& c,
                                        std::size_t samples,
                                        std::uint64_t seed);

// Solves argmax_{w in simplex} <w, q> - (1/lambda) * sum_j w_j ln w_j by
// pairwise coordinate ascent; each one-dimensional subproblem is bisected
// `resolution` times on the sign of its derivative. Independent of the
// closed-form softmax used by prices().
Prices ftrl_price(const ScaledCost& c, const Shares& q,
                  std::size_t resolution = 64);

}  // namespace privmarket

#endif  // PRIVMARKET_COST_FUNCTION_HPP_
