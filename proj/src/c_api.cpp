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

#include "privmarket/privmarket.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>

#include "privmarket/error.hpp"
#include "privmarket/fee_market.hpp"
#include "privmarket/harness.hpp"

struct pm_cost {
  privmarket::ScaledCost cost;
};

struct pm_market {
  privmarket::MarketSession session;
};

namespace {

thread_local std::string g_last_error;

pm_status to_status(privmarket::Errc c) {
  return static_cast<pm_status>(static_cast<int>(c));
}

template <class F>
pm_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PM_OK;
  } catch (const privmarket::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PM_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PM_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr)
    privmarket::fail(privmarket::Errc::kInvalidParameter, std::string(what) + " is null");
}

template <class V>
V to_vector(const double* x, size_t n) {
  need(x, "vector");
  return V(std::span<const double>(x, n));
}

void copy_out(const std::span<const double> v, double* out, size_t n) {
  need(out, "output buffer");
  if (v.size() != n)
    privmarket::fail(privmarket::Errc::kInvalidParameter, "buffer length does not match d");
  std::memcpy(out, v.data(), n * sizeof(double));
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

privmarket::CostKind kind_or_default(const char* kind) {
  return kind ? privmarket::parse_cost_kind(kind) : privmarket::CostKind::kLmsr;
}

}  // namespace

extern "C" {

const char* pm_last_error(void) { return g_last_error.c_str(); }

const char* pm_status_name(pm_status status) {
  switch (status) {
    case PM_OK: return "ok";
    case PM_INTERNAL: return "internal";
    default: break;
  }
  int c = static_cast<int>(status);
  if (c >= 1 && c <= 9) return privmarket::errc_name(static_cast<privmarket::Errc>(c)).data();
  return "unknown";
}

void pm_string_free(char* s) { std::free(s); }

pm_status pm_cost_create(size_t d, double lambda, const char* kind, pm_cost** out) {
  return guarded([&] {
    need(out, "out");
    *out = new pm_cost{privmarket::ScaledCost(d, lambda, kind_or_default(kind))};
  });
}

void pm_cost_destroy(pm_cost* cost) { delete cost; }

pm_status pm_cost_value(const pm_cost* c, const double* q, size_t d, double* out) {
  return guarded([&] {
    need(c, "cost");
    need(out, "out");
    *out = privmarket::cost(c->cost, to_vector<privmarket::Shares>(q, d));
  });
}

pm_status pm_cost_prices(const pm_cost* c, const double* q, size_t d, double* prices) {
  return guarded([&] {
    need(c, "cost");
    copy_out(privmarket::prices(c->cost, to_vector<privmarket::Shares>(q, d)).view(), prices, d);
  });
}

pm_status pm_cost_trade(const pm_cost* c, const double* q, const double* dq, size_t d,
                        double* out) {
  return guarded([&] {
    need(c, "cost");
    need(out, "out");
    *out = privmarket::trade_cost(c->cost, to_vector<privmarket::Shares>(q, d),
                                  to_vector<privmarket::Shares>(dq, d));
  });
}

pm_status pm_cost_invert(const pm_cost* c, const double* p, size_t d, double eta, double* q) {
  return guarded([&] {
    need(c, "cost");
    copy_out(privmarket::invert_prices(c->cost, to_vector<privmarket::Prices>(p, d), eta).view(),
             q, d);
  });
}

pm_status pm_cost_worst_case_loss(const pm_cost* c, double* out) {
  return guarded([&] {
    need(c, "cost");
    need(out, "out");
    *out = privmarket::worst_case_loss(c->cost);
  });
}

pm_status pm_lambda_star(double T, double alpha, double gamma, double epsilon, size_t d,
                         double* out) {
  return guarded([&] {
    need(out, "out");
    *out = privmarket::lambda_star(T, alpha, gamma, epsilon, d);
  });
}

pm_market_params pm_market_params_default(void) {
  privmarket::MarketParams p;
  return pm_market_params{p.d, p.epsilon, p.alpha, p.gamma, p.T, -1.0, 0.0, 0, 0};
}

pm_status pm_market_open(const pm_market_params* params, const char* kind, uint64_t seed,
                         pm_market** out) {
  return guarded([&] {
    need(params, "params");
    need(out, "out");
    privmarket::MarketParams p;
    p.d = params->d;
    p.epsilon = params->epsilon;
    p.alpha = params->alpha;
    p.gamma = params->gamma;
    p.T = params->T;
    if (params->fee >= 0.0) p.fee = params->fee;
    if (params->lambda > 0.0) p.lambda = params->lambda;
    p.noise_off = params->noise_off != 0;
    p.allow_unsafe_lambda = params->allow_unsafe_lambda != 0;
    *out = new pm_market{privmarket::MarketSession::open(p, kind_or_default(kind), seed)};
  });
}

void pm_market_destroy(pm_market* market) { delete market; }

pm_status pm_market_step(pm_market* m, const double* dq, size_t d, double* payment) {
  return guarded([&] {
    need(m, "market");
    const privmarket::StepRecord& r = m->session.step(to_vector<privmarket::Shares>(dq, d));
    if (payment) *payment = r.payment;
  });
}

pm_status pm_market_prices(const pm_market* m, double* prices, size_t d) {
  return guarded([&] {
    need(m, "market");
    copy_out(m->session.published_prices().view(), prices, d);
  });
}

pm_status pm_market_state(const pm_market* m, double* q_hat, size_t d) {
  return guarded([&] {
    need(m, "market");
    copy_out(m->session.q_hat().view(), q_hat, d);
  });
}

pm_status pm_market_arrivals(const pm_market* m, uint64_t* out) {
  return guarded([&] {
    need(m, "market");
    need(out, "out");
    *out = m->session.arrivals();
  });
}

pm_status pm_market_close(pm_market* m, size_t outcome, pm_ledger* out) {
  return guarded([&] {
    need(m, "market");
    const std::size_t d = m->session.params().d;
    privmarket::Ledger l = m->session.close(privmarket::OutcomeModel::complete(d), outcome);
    if (out) *out = pm_ledger{l.mm_loss, l.ntl, l.fees, l.designer_loss, l.arrivals};
  });
}

pm_status pm_run_trials(const char* config_json, const char* out_dir, int override_seeds,
                        uint64_t seed_first, uint64_t seed_last, unsigned parallel,
                        char** result_json) {
  return guarded([&] {
    need(config_json, "config_json");
    need(result_json, "result_json");
    privmarket::json j;
    try {
      j = privmarket::json::parse(config_json);
    } catch (const privmarket::json::parse_error& e) {
      privmarket::fail(privmarket::Errc::kConfig, e.what());
    }
    privmarket::RunConfig config = privmarket::RunConfig::from_json(j);
    if (override_seeds) {
      config.seed_first = seed_first;
      config.seed_last = seed_last;
    }
    if (out_dir && *out_dir) config.output_dir = out_dir;
    if (config.output_dir.empty())
      privmarket::fail(privmarket::Errc::kConfig, "no output directory given");
    config.validate();
    auto trials = privmarket::run_trials(config, parallel);
    privmarket::write_outputs(config.output_dir, config, trials);
    privmarket::json r = {{"output_dir", config.output_dir},
                          {"trials", trials.size()},
                          {"resolved", privmarket::resolved_parameters(config)}};
    *result_json = dup(r.dump(2));
  });
}

pm_status pm_verify(const char* metrics_dir, const char* check, char** report_json,
                    int* passed) {
  return guarded([&] {
    need(metrics_dir, "metrics_dir");
    need(report_json, "report_json");
    auto metrics = privmarket::MetricsSet::load(metrics_dir);
    auto report = privmarket::verify_metrics(metrics, check ? check : "all");
    *report_json = dup(report.to_json().dump(2));
    if (passed) *passed = report.passed ? 1 : 0;
  });
}

pm_status pm_audit(uint64_t T, size_t d, double epsilon, size_t pairs, uint64_t seed,
                   char** report_json, int* passed) {
  return guarded([&] {
    need(report_json, "report_json");
    auto report = privmarket::privacy_audit(T, d, epsilon, pairs, seed);
    *report_json = dup(report.to_json().dump(2));
    if (passed) *passed = report.passed ? 1 : 0;
  });
}

pm_status pm_schedule(double B1, size_t d, double alpha, double gamma, double epsilon,
                      unsigned k_max, double first_horizon, double growth, char** report_json) {
  return guarded([&] {
    need(report_json, "report_json");
    std::optional<double> first;
    if (first_horizon > 0.0) first = first_horizon;
    auto s = privmarket::stage_schedule(B1, d, alpha, gamma, epsilon, k_max, first, growth);
    *report_json = dup(privmarket::schedule_report(s, k_max).dump(2));
  });
}

}  // extern "C"
