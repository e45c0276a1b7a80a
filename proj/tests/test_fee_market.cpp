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

#include <cmath>
#include <functional>
#include <numeric>

#include "doctest.h"
#include "privmarket/error.hpp"
#include "privmarket/fee_market.hpp"
#include "privmarket/traders.hpp"

using namespace privmarket;

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

MarketParams unit_market(double fee) {
  MarketParams p;
  p.d = 2;
  p.T = 16;
  p.alpha = 0.1;
  p.lambda = 1.0;
  p.fee = fee;
  p.noise_off = true;
  p.allow_unsafe_lambda = true;
  return p;
}

MarketParams desk_market() {
  MarketParams p;
  p.d = 2;
  p.T = 16;
  p.epsilon = 1.0;
  p.alpha = 0.3;
  p.gamma = 0.1;
  return p;
}

}  // namespace

TEST_CASE("lambda star") {
  const double s2 = std::sqrt(2.0);
  CHECK(lambda_star(16, 0.2, 0.05, 1, 2) ==
        doctest::Approx(0.2 / (4 * s2 * 2 * 4 * std::log(1280.0))).epsilon(1e-12));
  CHECK(lambda_star(16, 0.2, 0.05, 1, 2) == doctest::Approx(6.177e-4).epsilon(1e-3));
  CHECK(lambda_star(16, 0.1, 0.1, 1, 1) ==
        doctest::Approx(0.1 / (4 * s2 * 4 * std::log(320.0))).epsilon(1e-12));
  CHECK(lambda_star(16, 0.1, 0.1, 1, 1) == doctest::Approx(7.662e-4).epsilon(1e-3));
  CHECK(code_of([] { lambda_star(16, 1.5, 0.1, 1, 1); }) == Errc::kInvalidParameter);
  CHECK(code_of([] { lambda_star(16, 0.1, 0.0, 1, 1); }) == Errc::kInvalidParameter);
  CHECK(code_of([] { lambda_star(16, 0.1, 0.1, -1, 1); }) == Errc::kInvalidParameter);
}

TEST_CASE("ceil log2 on large integer-valued doubles") {
  CHECK(ceil_log2_real(16.0) == 4.0);
  CHECK(ceil_log2_real(17.0) == 5.0);
  CHECK(ceil_log2_real(1.0) == 0.0);
  CHECK(ceil_log2_real(std::ldexp(1.0, 80)) == 80.0);
  CHECK(ceil_log2_real(std::ldexp(1.0, 80) + std::ldexp(1.0, 30)) == 81.0);
}

TEST_CASE("noise magnitude bound") {
  CHECK(noise_scale_K(16, 1, 2) == doctest::Approx(16.0));
  CHECK(noise_scale_K(16, 1, 1) == doctest::Approx(8 * std::sqrt(2.0)));
}

TEST_CASE("share accuracy bound") {
  CHECK(share_accuracy_bound(16, 1, 1, 0.1) ==
        doctest::Approx(4 * std::sqrt(2.0) * 4 * std::log(320.0)).epsilon(1e-12));
  CHECK(share_accuracy_bound(16, 1, 1, 0.1) == doctest::Approx(130.5).epsilon(1e-3));
  double prev = 0.0;
  for (double T = 2; T <= 1 << 20; T *= 2) {
    double b = share_accuracy_bound(T, 2, 1, 0.1);
    CHECK(b > prev);
    prev = b;
  }
}

TEST_CASE("open") {
  MarketSession s = MarketSession::open(desk_market(), CostKind::kLmsr, 1);
  CHECK(s.arrivals() == 0);
  CHECK(l1_norm(s.q_true().view()) == 0.0);
  CHECK(l1_norm(s.q_hat().view()) == 0.0);
  CHECK(s.fee() == 0.3);
  CHECK(s.cost_function().lambda() == doctest::Approx(lambda_star(16, 0.3, 0.1, 1, 2)));

  ScaledCost c(2, s.cost_function().lambda());
  Prices want{0.7, 0.3};
  MarketSession h = MarketSession::open(desk_market(), CostKind::kLmsr, 1,
                                        invert_prices(c, want, 0.01));
  CHECK(l1_distance(h.published_prices(), want) <= 1e-9);

  MarketParams bad = desk_market();
  bad.lambda = 2 * lambda_star(16, 0.3, 0.1, 1, 2);
  CHECK(code_of([&] { MarketSession::open(bad, CostKind::kLmsr, 1); }) ==
        Errc::kInvalidParameter);
  bad.allow_unsafe_lambda = true;
  CHECK(MarketSession::open(bad, CostKind::kLmsr, 1).cost_function().lambda() == *bad.lambda);
}

TEST_CASE("step without noise") {
  MarketSession s = MarketSession::open(unit_market(0.05), CostKind::kLmsr, 1);
  const StepRecord& r = s.step(Shares{1.0, 0.0});
  CHECK(r.payment == doctest::Approx(std::log(std::exp(1.0) + 1) - std::log(2.0)));
  CHECK(r.payment == doctest::Approx(0.620115).epsilon(1e-6));
  CHECK(r.fee == 0.05);
  CHECK(s.q_hat() == Shares{1.0, 0.0});

  const StepRecord& z = s.step(Shares(2));
  CHECK(z.payment == 0.0);
  CHECK(s.q_hat() == Shares{1.0, 0.0});
  CHECK(s.arrivals() == 2);
}

TEST_CASE("first noisy step buys z1 and sells nothing") {
  MarketSession s = MarketSession::open(desk_market(), CostKind::kLmsr, 5);
  const StepRecord& r = s.step(Shares{0.5, -0.25});
  CHECK(r.noise_sold.empty());
  Shares z = s.noise().bundle(1).value;
  CHECK(l1_distance(s.q_hat(), Shares{0.5, -0.25} + z) <= 1e-12);
}

TEST_CASE("step errors") {
  MarketSession s = MarketSession::open(unit_market(0.0), CostKind::kLmsr, 1);
  CHECK(code_of([&] { s.step(Shares{0.8, 0.3}); }) == Errc::kTradeRejected);
  CHECK(code_of([&] { s.step(Shares{0.1}); }) == Errc::kTradeRejected);
  CHECK(code_of([&] { s.step(Shares{NAN, 0.0}); }) == Errc::kTradeRejected);
  CHECK(s.arrivals() == 0);
  for (int i = 0; i < 16; ++i) s.step(Shares(2));
  CHECK(s.full());
  CHECK(code_of([&] { s.step(Shares(2)); }) == Errc::kMarketClosed);
}

TEST_CASE("close accounting") {
  MarketSession s = MarketSession::open(unit_market(0.05), CostKind::kLmsr, 1);
  s.step(Shares{1.0, 0.0});
  Ledger l = s.close(OutcomeModel::complete(2), 0);
  const double pay = std::log(std::exp(1.0) + 1) - std::log(2.0);
  CHECK(l.mm_loss == doctest::Approx(1 - pay));
  CHECK(l.mm_loss == doctest::Approx(0.379885).epsilon(1e-6));
  CHECK(l.ntl == 0.0);
  CHECK(l.fees == 0.05);
  CHECK(l.designer_loss == doctest::Approx(0.329885).epsilon(1e-6));
  CHECK(l.designer_loss <= std::log(2.0));
  CHECK(code_of([&] { s.close(OutcomeModel::complete(2), 0); }) == Errc::kInvalidState);
  CHECK(code_of([&] { s.step(Shares(2)); }) == Errc::kMarketClosed);
}

TEST_CASE("empty noisy market costs nothing") {
  MarketSession s = MarketSession::open(desk_market(), CostKind::kLmsr, 1);
  Ledger l = s.close(OutcomeModel::complete(2), 1);
  CHECK(l.mm_loss == 0.0);
  CHECK(l.fees == 0.0);
  CHECK(l.designer_loss == l.ntl);
  CHECK(s.noise().held().empty());
}

TEST_CASE("ledger, state and payment identities on noisy runs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    MarketParams p = desk_market();
    p.T = 13 + seed % 7;
    MarketSession s = MarketSession::open(p, CostKind::kLmsr, seed);
    RngStream rng(seed + 1000);
    double trade_payments = 0.0, noise_payments = 0.0;
    for (std::uint64_t t = 0; t < p.T; ++t) {
      Shares dq(2);
      dq[rng.below(2)] = rng.uniform() * (rng.uniform() < 0.5 ? -1 : 1);
      const StepRecord& r = s.step(dq);
      trade_payments += r.payment;
      noise_payments += r.noise_charge;
      CHECK(l1_distance(s.q_hat() - s.q_true(), s.noise().held_sum()) <= 1e-9);
    }
    Ledger l = s.close(OutcomeModel::complete(2), seed % 2);
    CHECK(s.noise().held().empty());
    CHECK(l.designer_loss == doctest::Approx(l.mm_loss + l.ntl - l.fees).epsilon(1e-14));
    double close_charge = 0.0;
    for (const NoiseBundle& b : s.noise().bundles()) {
      REQUIRE(b.sold_at.has_value());
      if (b.sold_at_close) close_charge += b.sell_cost;
    }
    noise_payments += close_charge;
    CHECK(l1_distance(s.q_hat(), s.q_true()) <= 1e-9);
    const ScaledCost& c = s.cost_function();
    CHECK(trade_payments + noise_payments ==
          doctest::Approx(cost(c, s.q_hat()) - cost(c, Shares(2))).epsilon(1e-9));
    CHECK(l.ntl == doctest::Approx(noise_payments).epsilon(1e-9));
  }
}

TEST_CASE("loss bounds") {
  LossBoundInputs in;
  in.lambda = 6.177e-4;
  in.T_prime = 16;
  in.K = 16;
  in.B1 = std::log(2.0);
  LossBounds b = loss_bounds(in);
  CHECK(b.ntl_bound == doctest::Approx(16 * 4 / 2.0 * 6.177e-4 * 16));
  CHECK(b.ntl_bound == doctest::Approx(0.3163).epsilon(1e-3));
  CHECK(b.ntl_bound_exact == doctest::Approx(b.ntl_bound));
  CHECK(b.ntl_bound_low_bit_sum == doctest::Approx(6.177e-4 * 16 * (32 + 16)));

  in.fee = in.K * in.lambda * 4;
  CHECK(loss_bounds(in).wc_bound <= in.B1 / in.lambda + 1e-9);
}

TEST_CASE("sufficient-fee condition at lambda star and c = alpha") {
  int tested = 0;
  for (std::uint64_t T : {2, 4, 16, 64, 1000, 1 << 20})
    for (std::size_t d : {1, 2, 5, 20})
      for (double gamma : {0.01, 0.05, 0.1, 0.5})
        for (double eps : {0.1, 0.5, 1.0, 4.0})
          for (double alpha : {0.05, 0.1, 0.3}) {
            LossBoundInputs in;
            in.lambda = lambda_star(double(T), alpha, gamma, eps, d);
            in.T_prime = T;
            in.fee = alpha;
            in.T = T;
            in.epsilon = eps;
            in.d = d;
            in.B1 = std::log(double(d));
            CHECK(loss_bounds(in).fee_condition_holds);
            ++tested;
          }
  CHECK(tested == 6 * 4 * 4 * 4 * 3);
}

TEST_CASE("bundle losses under arbitrage stay within lambda b(t) K") {
  // Per-bundle realized loss averaged over seeds, against lambda low_bit(t) K.
  const std::size_t seeds = 300;
  MarketParams p = desk_market();
  std::vector<std::vector<double>> loss(p.T + 1);
  double norm_sum = 0.0, norm_count = 0.0, lambda = 0.0;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    MarketSession s = MarketSession::open(p, CostKind::kLmsr, RngStream(seed).substream(1));
    lambda = s.cost_function().lambda();
    StrategyParams sp;
    sp.belief = Prices{0.5, 0.5};
    sp.threshold = 0.0;
    std::vector<std::unique_ptr<Strategy>> roster;
    // A random trader gets the noise going; the hunter then trades against it.
    roster.push_back(make_strategy(StrategyKind::kRandom, {}, RngStream(seed).substream(100), 2));
    roster.push_back(
        make_strategy(StrategyKind::kArbitrageHunter, sp, RngStream(seed).substream(101), 2));
    std::vector<std::size_t> arrivals(2 * p.T);
    for (std::size_t i = 0; i < arrivals.size(); ++i) arrivals[i] = i % 2;
    std::vector<TraderAccount> accounts(2);
    for (auto& a : accounts) a.position = Shares(2);
    drive_arrivals(s, roster, arrivals, 0, accounts);
    s.close(OutcomeModel::complete(2), seed % 2);
    for (const NoiseBundle& b : s.noise().bundles()) {
      loss[b.time].push_back(b.realized_loss());
      norm_sum += l2_norm(b.value.view());
      norm_count += 1;
    }
  }
  const double K = norm_sum / norm_count;
  for (std::uint64_t t = 1; t <= p.T; ++t) {
    const auto& xs = loss[t];
    REQUIRE(xs.size() == seeds);
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double se = std::sqrt(ss / (xs.size() - 1) / xs.size());
    CHECK(mean <= lambda * double(low_bit(t)) * K + 3 * se);
  }
}
