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
#include <random>

#include "doctest.h"
#include "privmarket/cost_function.hpp"
#include "privmarket/error.hpp"

using namespace privmarket;

namespace {

// Independent long-double LMSR used as the oracle.
long double lmsr_oracle(const std::vector<double>& q, long double lambda) {
  long double m = -INFINITY;
  for (double x : q) m = std::max(m, lambda * x);
  long double s = 0;
  for (double x : q) s += std::exp(lambda * x - m);
  return (m + std::log(s)) / lambda;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kInvalidState;
}

}  // namespace

TEST_CASE("cost at the origin") {
  CHECK(cost(ScaledCost(2, 1.0), Shares(2)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(cost(ScaledCost(2, 0.5), Shares(2)) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("cost stays finite far from the origin") {
  double c = cost(ScaledCost(2, 1.0), Shares{1000.0, 0.0});
  CHECK(std::isfinite(c));
  CHECK(c == doctest::Approx(static_cast<double>(lmsr_oracle({1000.0, 0.0}, 1.0L))).epsilon(1e-15));
  CHECK(cost(ScaledCost(3, 1.0), Shares{-1e6, 2e5, 0.0}) ==
        doctest::Approx(static_cast<double>(lmsr_oracle({-1e6, 2e5, 0.0}, 1.0L))));
}

TEST_CASE("cost matches the long-double oracle on random states") {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> q{u(g), u(g), u(g), u(g)};
    double lambda = 0.01 + 0.99 * (i % 10) / 9.0;
    CHECK(cost(ScaledCost(4, lambda), Shares(q)) ==
          doctest::Approx(static_cast<double>(lmsr_oracle(q, lambda))).epsilon(1e-12));
  }
}

TEST_CASE("prices") {
  Prices p = prices(ScaledCost(2, 1.0), Shares(2));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  p = prices(ScaledCost(2, 1.0), Shares{std::log(4.0), 0.0});
  CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("prices are the gradient of cost") {
  ScaledCost c(3, 0.1);
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(-30, 30);
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    Shares q{u(g), u(g), u(g)};
    Prices p = prices(c, q);
    for (std::size_t j = 0; j < 3; ++j) {
      Shares a = q, b = q;
      a[j] += h;
      b[j] -= h;
      double fd = (cost(c, a) - cost(c, b)) / (2 * h);
      CHECK(std::abs(fd - p[j]) <= 1e-6);
    }
  }
}

TEST_CASE("trade cost") {
  ScaledCost c(2, 1.0);
  CHECK(trade_cost(c, Shares(2), Shares{1.0, 0.0}) ==
        doctest::Approx(std::log(std::exp(1.0) + 1.0) - std::log(2.0)).epsilon(1e-14));
  CHECK(trade_cost(c, Shares(2), Shares{1.0, 0.0}) == doctest::Approx(0.620115).epsilon(1e-6));
  CHECK(trade_cost(c, Shares(2), Shares(2)) == 0.0);
  ScaledCost small(2, 0.01);
  double v = trade_cost(small, Shares(2), Shares{1.0, 0.0});
  CHECK(v == doctest::Approx(100 * std::log((std::exp(0.01) + 1) / 2)).epsilon(1e-12));
  CHECK(std::abs(v - 0.50125) <= 1e-7);
}

TEST_CASE("worst-case loss") {
  CHECK(worst_case_loss(ScaledCost(2, 1.0)) == doctest::Approx(std::log(2.0)));
  CHECK(worst_case_loss(ScaledCost(2, 0.01)) == doctest::Approx(100 * std::log(2.0)));
  CHECK(worst_case_loss(ScaledCost(4, 0.5)) == doctest::Approx(2 * std::log(4.0)));
}

TEST_CASE("invert prices") {
  ScaledCost c(2, 1.0);
  Shares q = invert_prices(c, Prices{0.5, 0.5}, 0.01);
  CHECK(q[0] == doctest::Approx(0.0));
  CHECK(q[1] == 0.0);
  q = invert_prices(c, Prices{0.8, 0.2}, 0.01);
  CHECK(q[0] == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(q[1] == 0.0);

  // (1, 0) clamps to (1, 0.01) / 1.01.
  Prices clamped = clamp_prices(Prices{1.0, 0.0}, 0.01);
  CHECK(clamped[0] == doctest::Approx(1.0 / 1.01));
  CHECK(clamped[1] == doctest::Approx(0.01 / 1.01));
  q = invert_prices(c, Prices{1.0, 0.0}, 0.01);
  CHECK(q[0] == doctest::Approx(std::log(100.0)));
  Prices back = prices(c, q);
  CHECK(back[0] == doctest::Approx(clamped[0]).epsilon(1e-12));

  ScaledCost c3(3, 0.25);
  Prices target{0.2, 0.5, 0.3};
  Prices round = prices(c3, invert_prices(c3, target, 0.01));
  for (std::size_t j = 0; j < 3; ++j) CHECK(round[j] == doctest::Approx(target[j]).epsilon(1e-12));
}

TEST_CASE("invert prices rejects bad clamp margins") {
  ScaledCost c(2, 1.0);
  CHECK(code_of([&] { invert_prices(c, Prices{0.5, 0.5}, 0.0); }) == Errc::kInvalidParameter);
  CHECK(code_of([&] { invert_prices(c, Prices{0.5, 0.5}, 0.5); }) == Errc::kInvalidParameter);
}

TEST_CASE("numeric sensitivity") {
  // Exhaustive grid oracle for the l1 Lipschitz constant at lambda = 1.
  ScaledCost one(2, 1.0);
  double grid_max = 0.0;
  for (double x = -8; x <= 8; x += 0.05) {
    for (double s : {-1.0, 1.0}) {
      Shares q{x, 0.0};
      Shares u{s * 0.5, -s * 0.5};
      grid_max = std::max(grid_max, l1_distance(prices(one, q + u), prices(one, q)));
    }
  }
  SensitivityEstimate e = numeric_sensitivity(one, 1000, 3);
  CHECK(e.l1 >= 0.0);
  CHECK(e.l1 <= 1.0);
  CHECK(grid_max <= 1.0);
  SensitivityEstimate small = numeric_sensitivity(ScaledCost(2, 0.01), 1000, 3);
  CHECK(small.l1 >= 0.0);
  CHECK(small.l1 <= 0.01);
  CHECK(small.l2 <= 0.01);
}

TEST_CASE("ftrl price matches the closed form") {
  CHECK(ftrl_price(ScaledCost(2, 1.0), Shares(2))[0] == doctest::Approx(0.5).epsilon(1e-9));
  Prices p = ftrl_price(ScaledCost(2, 1.0), Shares{std::log(4.0), 0.0});
  CHECK(std::abs(p[0] - 0.8) <= 1e-6);
  CHECK(std::abs(p[1] - 0.2) <= 1e-6);
  ScaledCost c(3, 0.2);
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 50; ++i) {
    Shares q{u(g), u(g), u(g)};
    CHECK(l1_distance(ftrl_price(c, q), prices(c, q)) <= 1e-6);
  }
}

TEST_CASE("worst-case market maker loss over a depth-6 trade grid") {
  // Exhaustive over every sequence of six trades from the grid, both outcomes.
  const std::vector<Shares> moves = {Shares{0.0, 0.0},  Shares{1.0, 0.0},  Shares{-1.0, 0.0},
                                     Shares{0.0, 1.0},  Shares{0.0, -1.0}, Shares{0.5, 0.5},
                                     Shares{0.5, -0.5}, Shares{-0.5, 0.5}, Shares{-0.5, -0.5}};
  for (double lambda : {1.0, 0.5}) {
    ScaledCost c(2, lambda);
    double worst = -INFINITY;
    std::function<void(int, const Shares&, double)> walk = [&](int depth, const Shares& q,
                                                               double paid) {
      if (depth == 6) {
        worst = std::max(worst, std::max(q[0], q[1]) - paid);
        return;
      }
      for (const Shares& m : moves) walk(depth + 1, q + m, paid + trade_cost(c, q, m));
    };
    walk(0, Shares(2), 0.0);
    CHECK(worst <= worst_case_loss(c) + 1e-12);
  }
}

TEST_CASE("errors") {
  CHECK(code_of([] { ScaledCost(2, 0.0); }) == Errc::kInvalidParameter);
  CHECK(code_of([] { ScaledCost(2, 1.5); }) == Errc::kInvalidParameter);
  CHECK(code_of([] { cost(ScaledCost(2, 1.0), Shares{NAN, 0.0}); }) == Errc::kInvalidState);
  CHECK(code_of([] { prices(ScaledCost(2, 1.0), Shares{INFINITY, 0.0}); }) ==
        Errc::kInvalidState);
  CHECK(code_of([] { parse_cost_kind("quadratic"); }) == Errc::kNotImplemented);
  CHECK(parse_cost_kind("lmsr") == CostKind::kLmsr);
}

TEST_CASE("complete outcome model") {
  OutcomeModel m = OutcomeModel::complete(3);
  CHECK(m.outcomes() == 3);
  CHECK(m.payoff(1) == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(code_of([] { OutcomeModel::from_payoffs({{0.5, 2.0}}); }) == Errc::kInvalidParameter);
}
