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
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "privmarket/privmarket.h"

namespace fs = std::filesystem;

TEST_CASE("cost handle") {
  pm_cost* c = nullptr;
  REQUIRE(pm_cost_create(2, 1.0, "lmsr", &c) == PM_OK);
  double q[2] = {0.0, 0.0};
  double v = 0.0;
  CHECK(pm_cost_value(c, q, 2, &v) == PM_OK);
  CHECK(v == doctest::Approx(std::log(2.0)));
  double dq[2] = {1.0, 0.0};
  CHECK(pm_cost_trade(c, q, dq, 2, &v) == PM_OK);
  CHECK(v == doctest::Approx(0.620115).epsilon(1e-6));
  double p[2] = {0.8, 0.2};
  double out[2];
  CHECK(pm_cost_invert(c, p, 2, 0.01, out) == PM_OK);
  CHECK(out[0] == doctest::Approx(std::log(4.0)));
  CHECK(pm_cost_prices(c, out, 2, out) == PM_OK);
  CHECK(out[0] == doctest::Approx(0.8));
  CHECK(pm_cost_prices(c, q, 3, out) == PM_INVALID_STATE);
  CHECK(std::strlen(pm_last_error()) > 0);
  CHECK(pm_cost_worst_case_loss(c, &v) == PM_OK);
  CHECK(v == doctest::Approx(std::log(2.0)));
  pm_cost_destroy(c);

  CHECK(pm_cost_create(2, 2.0, nullptr, &c) == PM_INVALID_PARAMETER);
  CHECK(pm_cost_create(2, 0.5, "quadratic", &c) == PM_NOT_IMPLEMENTED);
  CHECK(std::string(pm_status_name(PM_NOT_IMPLEMENTED)) == "not-implemented");
}

TEST_CASE("lambda star") {
  double v = 0.0;
  CHECK(pm_lambda_star(16, 0.1, 0.1, 1, 1, &v) == PM_OK);
  CHECK(v == doctest::Approx(7.662e-4).epsilon(1e-3));
  CHECK(pm_lambda_star(16, 2.0, 0.1, 1, 1, &v) == PM_INVALID_PARAMETER);
}

TEST_CASE("market handle") {
  pm_market_params p = pm_market_params_default();
  p.d = 2;
  p.T = 2;
  p.lambda = 1.0;
  p.fee = 0.05;
  p.noise_off = 1;
  pm_market* m = nullptr;
  CHECK(pm_market_open(&p, "lmsr", 1, &m) == PM_INVALID_PARAMETER);
  p.allow_unsafe_lambda = 1;
  REQUIRE(pm_market_open(&p, "lmsr", 1, &m) == PM_OK);
  double dq[2] = {1.0, 0.0};
  double pay = 0.0;
  CHECK(pm_market_step(m, dq, 2, &pay) == PM_OK);
  CHECK(pay == doctest::Approx(0.620115).epsilon(1e-6));
  double big[2] = {1.0, 1.0};
  CHECK(pm_market_step(m, big, 2, nullptr) == PM_TRADE_REJECTED);
  double state[2];
  CHECK(pm_market_state(m, state, 2) == PM_OK);
  CHECK(state[0] == 1.0);
  uint64_t n = 0;
  CHECK(pm_market_arrivals(m, &n) == PM_OK);
  CHECK(n == 1);
  pm_ledger l;
  CHECK(pm_market_close(m, 0, &l) == PM_OK);
  CHECK(l.designer_loss == doctest::Approx(0.329885).epsilon(1e-6));
  CHECK(pm_market_close(m, 0, &l) == PM_INVALID_STATE);
  CHECK(pm_market_step(m, dq, 2, nullptr) == PM_MARKET_CLOSED);
  pm_market_destroy(m);
}

TEST_CASE("harness entry points") {
  fs::path dir = fs::temp_directory_path() / "privmarket_capi_run";
  fs::remove_all(dir);
  const char* config = R"({
    "market": {"d": 2, "epsilon": 1.0, "alpha": 0.3, "gamma": 0.1, "T": 32},
    "traders": [{"kind": "herd"}, {"kind": "random"}],
    "seeds": {"first": 0, "last": 9}
  })";
  char* out = nullptr;
  CHECK(pm_run_trials(config, dir.c_str(), 1, 0, 119, 2, &out) == PM_OK);
  REQUIRE(out != nullptr);
  CHECK(std::string(out).find("\"trials\": 120") != std::string::npos);
  pm_string_free(out);

  int passed = 0;
  CHECK(pm_verify(dir.c_str(), "all", &out, &passed) == PM_OK);
  CHECK(passed == 1);
  pm_string_free(out);

  CHECK(pm_run_trials("{\"market\": {}, \"bogus\": 1}", dir.c_str(), 0, 0, 0, 1, &out) ==
        PM_CONFIG);
  CHECK(std::string(pm_last_error()).find("bogus") != std::string::npos);

  fs::path few = dir / "few";
  CHECK(pm_run_trials(config, few.c_str(), 0, 0, 0, 1, &out) == PM_OK);
  pm_string_free(out);
  CHECK(pm_verify(few.c_str(), "precision", &out, &passed) == PM_INSUFFICIENT_DATA);
  fs::remove_all(dir);

  CHECK(pm_audit(8, 2, 1.0, 100, 0, &out, &passed) == PM_OK);
  CHECK(passed == 1);
  CHECK(std::string(out).find("\"max_participation\": 4") != std::string::npos);
  pm_string_free(out);

  CHECK(pm_schedule(std::log(2.0), 1, 0.1, 0.1, 1.0, 5, 0.0, 4.0, &out) == PM_OK);
  CHECK(std::string(out).find("\"all_pass\": true") != std::string::npos);
  pm_string_free(out);
}
