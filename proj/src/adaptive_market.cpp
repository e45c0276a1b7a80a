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

#include "privmarket/adaptive_market.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "privmarket/error.hpp"

namespace privmarket {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
// Largest horizon the simulator will run; full-scale stages are checked
// analytically instead.
constexpr double kMaxSimulatedHorizon = 1e9;

void check_ranges(double B1, std::size_t d, double alpha, double gamma, double epsilon) {
  require(B1 > 0.0, Errc::kInvalidParameter, "B1 must be positive");
  require(d >= 1, Errc::kInvalidParameter, "d must be positive");
  require(alpha > 0.0 && alpha < 1.0, Errc::kInvalidParameter, "alpha must lie in (0, 1)");
  require(gamma > 0.0 && gamma < 1.0, Errc::kInvalidParameter, "gamma must lie in (0, 1)");
  require(epsilon > 0.0, Errc::kInvalidParameter, "epsilon must be positive");
}

StageParams make_stage(const StageSchedule& s, unsigned k, double first_horizon) {
  StageParams sp;
  sp.k = k;
  sp.horizon = std::ceil(first_horizon * std::pow(s.growth, static_cast<double>(k - 1)));
  const double halving = std::ldexp(1.0, -static_cast<int>(k));
  sp.alpha = s.alpha * halving;
  sp.gamma = s.gamma * halving;
  sp.lambda = lambda_star(sp.horizon, sp.alpha, sp.gamma, s.epsilon, s.d);
  return sp;
}

}  // namespace

double minimal_T(double A, double D) {
  require(A >= 1.0 && D >= 1.0, Errc::kInvalidParameter, "minimal_T needs A, D >= 1");
  if (!(A * D >= 5.0))
    fail(Errc::kInvalidParameter, "minimal_T needs A*D >= 5, got " + std::to_string(A * D));
  const double l = std::log(A * D);
  return 9.0 * A * l * l;
}

StageSchedule stage_schedule(double B1, std::size_t d, double alpha, double gamma,
                             double epsilon, unsigned max_stages,
                             std::optional<double> first_horizon, double growth) {
  check_ranges(B1, d, alpha, gamma, epsilon);
  require(max_stages >= 1 && max_stages <= 60, Errc::kInvalidParameter,
          "max_stages must lie in [1, 60]");
  require(growth >= 1.0 && std::floor(growth) == growth, Errc::kInvalidParameter,
          "stage growth must be an integer >= 1");

  StageSchedule s;
  s.B1 = B1;
  s.d = d;
  s.alpha = alpha;
  s.gamma = gamma;
  s.epsilon = epsilon;
  s.growth = growth;
  const double dd = static_cast<double>(d);
  s.A_prime = B1 * 8.0 * kSqrt2 * dd / (alpha * epsilon);
  s.A = 16.0 * s.A_prime / alpha;
  s.D = 4.0 * dd / gamma;
  s.first_horizon_formula = std::ceil(minimal_T(s.A, s.D));
  const double closed_log =
      std::log(4608.0 * B1 * kSqrt2 * dd * dd / (gamma * alpha * alpha * epsilon));
  s.first_horizon_closed_form =
      std::ceil(B1 * 1152.0 * kSqrt2 * dd * closed_log * closed_log / (alpha * alpha * epsilon));

  double t1 = s.first_horizon_formula;
  if (first_horizon) {
    require(*first_horizon >= 2.0 && std::floor(*first_horizon) == *first_horizon,
            Errc::kInvalidParameter, "stage override must be an integer >= 2");
    t1 = *first_horizon;
    s.overridden = true;
  }
  for (unsigned k = 1; k <= max_stages; ++k) s.stages.push_back(make_stage(s, k, t1));
  return s;
}

double budget_bound(double B1, std::size_t d, double alpha, double gamma, double epsilon) {
  check_ranges(B1, d, alpha, gamma, epsilon);
  const double dd = static_cast<double>(d);
  const double l = std::log(4608.0 * B1 * kSqrt2 * dd * dd / (gamma * alpha * alpha * epsilon));
  return B1 * 72.0 * kSqrt2 * dd / (alpha * epsilon) * l * l;
}

StageInequalityReport verify_stage_inequalities(const StageSchedule& schedule, unsigned k_max) {
  require(!schedule.stages.empty(), Errc::kInvalidParameter, "empty stage schedule");
  require(k_max >= 1 && k_max <= 60, Errc::kInvalidParameter, "k_max must lie in [1, 60]");
  const double t1 = schedule.stages.front().horizon;
  const double sqrt_d = std::sqrt(static_cast<double>(schedule.d));

  StageInequalityReport report;
  report.first_stage_ratio = std::log2(t1) / (8.0 * std::log(4.0 * t1));
  report.first_stage_ok = report.first_stage_ratio <= 0.25;
  bool all_ok = report.first_stage_ok;

  double previous_lambda = 0.0;
  for (unsigned k = 1; k <= k_max; ++k) {
    const StageParams sp = make_stage(schedule, k, t1);
    StageCheck check;
    check.k = k;
    check.loss = schedule.B1 / sp.lambda;
    check.loss_cap = schedule.alpha / 16.0 * sp.horizon;
    check.loss_ok = check.loss <= check.loss_cap;
    const double two_k = std::ldexp(1.0, static_cast<int>(k));
    check.profit_bracket =
        1.0 -
        std::log2(sp.horizon) /
            (4.0 * two_k * sqrt_d *
             std::log(2.0 * static_cast<double>(schedule.d) * sp.horizon * two_k / schedule.gamma)) -
        1.0 / 16.0;
    check.profit_ok = check.profit_bracket >= 0.5;
    if (k >= 2) {
      check.lambda_ratio = previous_lambda / sp.lambda;
      check.lambda_ratio_ok = check.lambda_ratio <= 4.0;
    }
    previous_lambda = sp.lambda;
    all_ok = all_ok && check.loss_ok && check.profit_ok;
    report.stages.push_back(check);
  }

  for (unsigned k = k_max; k >= 2; --k) {
    if (!report.stages[k - 1].lambda_ratio_ok) break;
    report.lambda_ratio_holds_from = k;
  }
  report.all_pass = all_ok;
  return report;
}

Shares transition(const Prices& previous_prices, double next_lambda, CostKind kind, double eta) {
  const ScaledCost next(previous_prices.size(), next_lambda, kind);
  return invert_prices(next, previous_prices, eta);
}

AdaptiveResult run_adaptive(const StageSchedule& schedule,
                            std::span<const std::unique_ptr<Strategy>> roster,
                            std::span<const std::size_t> arrivals, const OutcomeModel& outcomes,
                            std::size_t outcome, RngStream noise_stream,
                            const AdaptiveOptions& options) {
  require(!schedule.stages.empty(), Errc::kInvalidParameter, "empty stage schedule");
  require(outcomes.securities() == schedule.d, Errc::kInvalidParameter,
          "outcome model dimension does not match the schedule");
  const std::size_t d = schedule.d;

  AdaptiveResult result;
  result.accounts.resize(roster.size());
  for (TraderAccount& a : result.accounts) a.position = Shares(d);

  Shares opening(d);
  Prices handoff;
  Shares shadow(d);  // noiseless counterpart of the published state
  std::size_t slot = 0;

  for (const StageParams& sp : schedule.stages) {
    if (sp.horizon > kMaxSimulatedHorizon)
      fail(Errc::kInvalidParameter,
           "stage " + std::to_string(sp.k) + " horizon " + std::to_string(sp.horizon) +
               " is beyond simulation scale; use a stage override");
    MarketParams mp;
    mp.d = d;
    mp.epsilon = schedule.epsilon;
    mp.alpha = sp.alpha;
    mp.gamma = sp.gamma;
    mp.T = static_cast<std::uint64_t>(sp.horizon);
    mp.fee = options.fee.value_or(schedule.alpha);
    mp.lambda = sp.lambda;
    mp.noise_off = options.noise_off;

    MarketSession session =
        MarketSession::open(mp, options.kind, noise_stream.substream(sp.k), opening);
    const ScaledCost& cost_fn = session.cost_function();

    StageResult stage;
    stage.k = sp.k;
    stage.opening_state = opening;
    stage.opening_prices = session.published_prices();
    stage.handoff_prices = handoff.empty() ? stage.opening_prices : handoff;
    result.max_global_price_gap = std::max(
        result.max_global_price_gap, l1_distance(prices(cost_fn, shadow), stage.opening_prices));

    slot = drive_arrivals(session, roster, arrivals, slot, result.accounts,
                          [&](const StepRecord& rec) {
                            shadow += rec.dq;
                            result.max_global_price_gap =
                                std::max(result.max_global_price_gap,
                                         l1_distance(prices(cost_fn, shadow), rec.p_hat));
                          });

    stage.arrivals = session.arrivals();
    stage.completed = session.full();
    stage.final_prices = session.published_prices();
    stage.max_price_gap = session.max_price_gap();
    stage.max_share_gap = session.max_share_gap();
    const Prices shadow_final = prices(cost_fn, shadow);
    stage.ledger = session.close(outcomes, outcome);

    result.global += stage.ledger;
    result.arrivals += stage.arrivals;
    result.max_share_gap = std::max(result.max_share_gap, stage.max_share_gap);
    const bool last = sp.k == schedule.stages.back().k;
    const bool more = stage.completed && !last && slot < arrivals.size();
    result.stages.push_back(std::move(stage));
    if (!more) break;

    const StageParams& next = schedule.stages[sp.k];
    const double eta = options.eta.value_or(next.alpha / (4.0 * static_cast<double>(d)));
    const Prices& final_prices = result.stages.back().final_prices;
    handoff = clamp_prices(final_prices, eta);
    opening = transition(final_prices, next.lambda, options.kind, eta);
    shadow = transition(shadow_final, next.lambda, options.kind, eta);
  }
  return result;
}

}  // namespace privmarket
