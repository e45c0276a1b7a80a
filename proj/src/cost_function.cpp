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

#include "privmarket/cost_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "privmarket/error.hpp"
#include "privmarket/rng.hpp"

namespace privmarket {

namespace {

void check_state(const ScaledCost& c, std::span<const double> q) {
  if (q.size() != c.d())
    fail(Errc::kInvalidState, "share vector has " + std::to_string(q.size()) +
                                  " coordinates, expected " +
                                  std::to_string(c.d()));
  if (!all_finite(q)) fail(Errc::kInvalidState, "share vector is not finite");
}

// ln sum_j exp(lambda * q_j), shifted by the max.
double scaled_log_sum_exp(double lambda, std::span<const double> q) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : q) m = std::max(m, lambda * x);
  double s = 0.0;
  for (double x : q) s += std::exp(lambda * x - m);
  return m + std::log(s);
}

}  // namespace

std::string_view cost_kind_name(CostKind kind) {
  switch (kind) {
    case CostKind::kLmsr: return "lmsr";
  }
  return "unknown";
}

CostKind parse_cost_kind(std::string_view name) {
  if (name == "lmsr") return CostKind::kLmsr;
  fail(Errc::kNotImplemented, "unsupported cost kind '" + std::string(name) + "'");
}

OutcomeModel OutcomeModel::complete(std::size_t d) {
  require(d >= 1, Errc::kInvalidParameter, "outcome model needs d >= 1");
  std::vector<std::vector<double>> payoffs(d, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < d; ++j) payoffs[j][j] = 1.0;
  return OutcomeModel(d, std::move(payoffs));
}

OutcomeModel OutcomeModel::from_payoffs(std::vector<std::vector<double>> payoffs) {
  require(!payoffs.empty(), Errc::kInvalidParameter, "outcome model has no outcomes");
  const std::size_t d = payoffs.front().size();
  require(d >= 1, Errc::kInvalidParameter, "payoff vectors are empty");
  for (const auto& row : payoffs) {
    require(row.size() == d, Errc::kInvalidParameter, "payoff vectors differ in length");
    for (double x : row)
      require(x >= 0.0 && x <= 1.0, Errc::kInvalidParameter,
              "payoff coordinates must lie in [0, 1]");
  }
  return OutcomeModel(d, std::move(payoffs));
}

const std::vector<double>& OutcomeModel::payoff(std::size_t outcome) const {
  if (outcome >= payoffs_.size())
    fail(Errc::kInvalidParameter, "outcome " + std::to_string(outcome) +
                                      " outside the outcome space");
  return payoffs_[outcome];
}

ScaledCost::ScaledCost(std::size_t d, double lambda, CostKind kind)
    : d_(d), lambda_(lambda), kind_(kind) {
  require(d >= 1, Errc::kInvalidParameter, "cost function needs d >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0))
    fail(Errc::kInvalidParameter,
         "price sensitivity must lie in (0, 1], got " + std::to_string(lambda));
  switch (kind) {
    case CostKind::kLmsr: base_loss_ = std::log(static_cast<double>(d)); break;
  }
}

double cost(const ScaledCost& c, const Shares& q) {
  check_state(c, q.view());
  return scaled_log_sum_exp(c.lambda(), q.view()) / c.lambda();
}

Prices prices(const ScaledCost& c, const Shares& q) {
  check_state(c, q.view());
  const double lambda = c.lambda();
  double m = -std::numeric_limits<double>::infinity();
  for (double x : q) m = std::max(m, lambda * x);
  Prices p(c.d());
  double s = 0.0;
  for (std::size_t j = 0; j < c.d(); ++j) {
    p[j] = std::exp(lambda * q[j] - m);
    s += p[j];
  }
  for (double& x : p) x /= s;
  return p;
}

double trade_cost(const ScaledCost& c, const Shares& q, const Shares& dq) {
  check_state(c, dq.view());
  return cost(c, q + dq) - cost(c, q);
}

double worst_case_loss(const ScaledCost& c) { return c.base_loss() / c.lambda(); }

Prices clamp_prices(const Prices& p, double eta) {
  Prices out = p;
  double s = 0.0;
  for (double& x : out) {
    x = std::max(x, eta);
    s += x;
  }
  for (double& x : out) x /= s;
  return out;
}

Shares invert_prices(const ScaledCost& c, const Prices& p, double eta) {
  const double d = static_cast<double>(c.d());
  if (!(eta > 0.0 && eta < 1.0 / d))
    fail(Errc::kInvalidParameter,
         "clamp margin must lie in (0, 1/d), got " + std::to_string(eta));
  require(p.size() == c.d(), Errc::kInvalidParameter, "price vector has wrong dimension");
  require(all_finite(p.view()), Errc::kInvalidParameter, "price vector is not finite");
  double total = 0.0;
  for (double x : p) total += x;
  if (std::abs(total - 1.0) > 1e-9)
    fail(Errc::kInvalidParameter,
         "prices must sum to 1 within 1e-9, got " + std::to_string(total));

  const Prices clamped = clamp_prices(p, eta);
  Shares q(c.d());
  switch (c.kind()) {
    case CostKind::kLmsr: {
      const double last = std::log(clamped[c.d() - 1]);
      for (std::size_t j = 0; j < c.d(); ++j)
        q[j] = (std::log(clamped[j]) - last) / c.lambda();
      q[c.d() - 1] = 0.0;
      break;
    }
  }
  return q;
}

SensitivityEstimate numeric_sensitivity(const ScaledCost& c, std::size_t samples,
                                        std::uint64_t seed) {
  RngStream rng(seed);
  const std::size_t d = c.d();
  const double radius = 6.0 / c.lambda();
  SensitivityEstimate est;
  for (std::size_t n = 0; n < samples; ++n) {
    Shares q(d);
    for (double& x : q) x = radius * (2.0 * rng.uniform() - 1.0);

    // Alternate between unit coordinate moves and random l1-unit directions.
    Shares u(d);
    if (n % 2 == 0) {
      u = unit_shares(d, static_cast<std::size_t>(rng.below(d)),
                      rng.uniform() < 0.5 ? -1.0 : 1.0);
    } else {
      double s = 0.0;
      for (double& x : u) {
        x = -std::log(rng.uniform_open());
        if (rng.uniform() < 0.5) x = -x;
        s += std::abs(x);
      }
      u *= 1.0 / s;
    }
    const Prices a = prices(c, q);
    const Prices b = prices(c, q + u);
    Prices diff = b;
    for (std::size_t j = 0; j < d; ++j) diff[j] -= a[j];
    est.l1 = std::max(est.l1, l1_norm(diff.view()));
    est.l2 = std::max(est.l2, l2_norm(diff.view()) / l2_norm(u.view()));
  }
  return est;
}

Prices ftrl_price(const ScaledCost& c, const Shares& q, std::size_t resolution) {
  check_state(c, q.view());
  if (c.kind() != CostKind::kLmsr)
    fail(Errc::kNotImplemented, "ftrl_price supports the LMSR kind only");
  require(resolution >= 1, Errc::kInvalidParameter, "resolution must be positive");

  const std::size_t d = c.d();
  const double inv_lambda = 1.0 / c.lambda();
  std::vector<double> w(d, 1.0 / static_cast<double>(d));
  if (d == 1) return Prices(std::move(w));

  constexpr int kMaxSweeps = 500;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i + 1 < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) {
        const double mass = w[i] + w[j];
        if (mass <= 0.0) continue;
        // Maximize over t in (0,1), w_i = mass * t, w_j = mass * (1 - t).
        // The derivative (q_i - q_j) - (1/lambda) ln(t / (1 - t)) is
        // decreasing in t.
        const double gap = q[i] - q[j];
        double lo = 0.0;
        double hi = 1.0;
        for (std::size_t it = 0; it < resolution; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double slope = gap - inv_lambda * (std::log(mid) - std::log1p(-mid));
          if (slope > 0.0)
            lo = mid;
          else
            hi = mid;
        }
        const double t = 0.5 * (lo + hi);
        const double wi = mass * t;
        moved = std::max(moved, std::abs(wi - w[i]));
        w[i] = wi;
        w[j] = mass - wi;
      }
    }
    if (moved < 1e-15) break;
  }
  return Prices(std::move(w));
}

}  // namespace privmarket
