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

#ifndef PRIVMARKET_PRIVMARKET_H_
#define PRIVMARKET_PRIVMARKET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PM_API __declspec(dllexport)
#else
#define PM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pm_status {
  PM_OK = 0,
  PM_INVALID_PARAMETER = 1,
  PM_INVALID_STATE = 2,
  PM_TRADE_REJECTED = 3,
  PM_MARKET_CLOSED = 4,
  PM_NOT_IMPLEMENTED = 5,
  PM_INSUFFICIENT_DATA = 6,
  PM_STRATEGY_BUG = 7,
  PM_IO = 8,
  PM_CONFIG = 9,
  PM_INTERNAL = 99
} pm_status;

typedef struct pm_cost pm_cost;
typedef struct pm_market pm_market;

/* Message for the last failing call on this thread; "" after success. */
PM_API const char* pm_last_error(void);
PM_API const char* pm_status_name(pm_status status);

/* Strings handed out by the library are released with this. */
PM_API void pm_string_free(char* s);

/* ---- cost function ---- */

/* kind may be NULL for "lmsr". */
PM_API pm_status pm_cost_create(size_t d, double lambda, const char* kind, pm_cost** out);
PM_API void pm_cost_destroy(pm_cost* cost);
PM_API pm_status pm_cost_value(const pm_cost* cost, const double* q, size_t d, double* out);
PM_API pm_status pm_cost_prices(const pm_cost* cost, const double* q, size_t d, double* prices);
PM_API pm_status pm_cost_trade(const pm_cost* cost, const double* q, const double* dq, size_t d,
                               double* out);
PM_API pm_status pm_cost_invert(const pm_cost* cost, const double* p, size_t d, double eta,
                                double* q);
PM_API pm_status pm_cost_worst_case_loss(const pm_cost* cost, double* out);

PM_API pm_status pm_lambda_star(double T, double alpha, double gamma, double epsilon, size_t d,
                                double* out);

/* ---- market session ---- */

typedef struct pm_market_params {
  size_t d;
  double epsilon;
  double alpha;
  double gamma;
  uint64_t T;
  double fee;    /* negative: alpha */
  double lambda; /* non-positive: lambda_star */
  int noise_off;
  int allow_unsafe_lambda;
} pm_market_params;

typedef struct pm_ledger {
  double mm_loss;
  double ntl;
  double fees;
  double designer_loss;
  uint64_t arrivals;
} pm_ledger;

PM_API pm_market_params pm_market_params_default(void);
PM_API pm_status pm_market_open(const pm_market_params* params, const char* kind, uint64_t seed,
                                pm_market** out);
PM_API void pm_market_destroy(pm_market* market);
/* payment may be NULL. */
PM_API pm_status pm_market_step(pm_market* market, const double* dq, size_t d, double* payment);
PM_API pm_status pm_market_prices(const pm_market* market, double* prices, size_t d);
PM_API pm_status pm_market_state(const pm_market* market, double* q_hat, size_t d);
PM_API pm_status pm_market_arrivals(const pm_market* market, uint64_t* out);
PM_API pm_status pm_market_close(pm_market* market, size_t outcome, pm_ledger* out);

/* ---- harness; results are JSON strings freed with pm_string_free ---- */

/* Runs the config's seed range (or [seed_first, seed_last] when
   override_seeds is non-zero) and writes outputs to out_dir, falling back to
   the config's output_dir. */
PM_API pm_status pm_run_trials(const char* config_json, const char* out_dir, int override_seeds,
                               uint64_t seed_first, uint64_t seed_last, unsigned parallel,
                               char** result_json);
/* check: precision, budget, shares, noise_loss, summary or all. */
PM_API pm_status pm_verify(const char* metrics_dir, const char* check, char** report_json,
                           int* passed);
PM_API pm_status pm_audit(uint64_t T, size_t d, double epsilon, size_t pairs, uint64_t seed,
                          char** report_json, int* passed);
/* first_horizon <= 0 keeps the derived T^(1). */
PM_API pm_status pm_schedule(double B1, size_t d, double alpha, double gamma, double epsilon,
                             unsigned k_max, double first_horizon, double growth,
                             char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* PRIVMARKET_PRIVMARKET_H_ */
