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

#include "privmarket/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "privmarket/error.hpp"
#include "privmarket/noise_schedule.hpp"

namespace privmarket {

namespace {

// Stream labels under the trial seed.
constexpr std::uint64_t kNoiseLabel = 1;
constexpr std::uint64_t kOutcomeLabel = 2;
constexpr std::uint64_t kArrivalLabel = 3;
constexpr std::uint64_t kTraderLabelBase = 100;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  fail(Errc::kConfig, path + ": " + what);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return it.key() == k; });
    if (!known) config_error(path + "." + it.key(), "unknown field");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  return j.get<double>();
}

std::uint64_t get_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
    config_error(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) config_error(path, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) config_error(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) config_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

const char* order_name(ArrivalOrder o) {
  return o == ArrivalOrder::kShuffled ? "shuffled" : "round_robin";
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double se = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.n = xs.size();
  if (xs.empty()) return m;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(m.n);
  m.min = *std::min_element(xs.begin(), xs.end());
  m.max = *std::max_element(xs.begin(), xs.end());
  if (m.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / static_cast<double>(m.n - 1) / static_cast<double>(m.n));
  }
  return m;
}

void require_seeds(std::span<const TrialMetrics> trials, const char* check) {
  if (trials.size() < kMinVerifierSeeds)
    fail(Errc::kInsufficientData, std::string(check) + " needs at least " +
                                      std::to_string(kMinVerifierSeeds) + " seeds, got " +
                                      std::to_string(trials.size()));
}

CheckReport exceedance(const std::string& name, std::span<const TrialMetrics> trials,
                       double gamma, const std::function<bool(const TrialMetrics&)>& exceeds) {
  CheckReport r;
  r.name = name;
  r.n = trials.size();
  std::size_t hits = 0;
  for (const TrialMetrics& m : trials) hits += exceeds(m) ? 1 : 0;
  r.statistic = static_cast<double>(hits) / static_cast<double>(r.n);
  r.threshold = gamma;
  r.tolerance = 3.0 * std::sqrt(gamma * (1.0 - gamma) / static_cast<double>(r.n));
  r.margin = r.threshold + r.tolerance - r.statistic;
  r.passed = r.margin >= 0.0;
  r.detail["exceedances"] = hits;
  return r;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIo, "cannot write " + p.string());
  out << text;
  if (!out) fail(Errc::kIo, "write failed: " + p.string());
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig RunConfig::from_json(const json& j) {
  check_keys(j, "config",
             {"market", "adaptive", "traders", "arrivals", "outcome", "seeds", "output_dir"});
  RunConfig c;

  if (!j.contains("market")) config_error("config.market", "missing");
  const json& m = j["market"];
  check_keys(m, "market",
             {"d", "epsilon", "alpha", "gamma", "T", "fee", "lambda", "lambda_multiplier",
              "noise_off", "allow_unsafe_lambda", "cost"});
  if (m.contains("d")) c.market.d = get_count(m["d"], "market.d");
  if (m.contains("epsilon")) c.market.epsilon = get_number(m["epsilon"], "market.epsilon");
  if (m.contains("alpha")) c.market.alpha = get_number(m["alpha"], "market.alpha");
  if (m.contains("gamma")) c.market.gamma = get_number(m["gamma"], "market.gamma");
  if (m.contains("T")) c.market.T = get_count(m["T"], "market.T");
  if (m.contains("fee")) c.market.fee = get_number(m["fee"], "market.fee");
  if (m.contains("lambda")) c.market.lambda = get_number(m["lambda"], "market.lambda");
  if (m.contains("lambda_multiplier"))
    c.lambda_multiplier = get_number(m["lambda_multiplier"], "market.lambda_multiplier");
  if (m.contains("noise_off")) c.market.noise_off = get_bool(m["noise_off"], "market.noise_off");
  if (m.contains("allow_unsafe_lambda"))
    c.market.allow_unsafe_lambda = get_bool(m["allow_unsafe_lambda"], "market.allow_unsafe_lambda");
  if (m.contains("cost")) {
    try {
      c.cost = parse_cost_kind(get_string(m["cost"], "market.cost"));
    } catch (const Error& e) {
      config_error("market.cost", e.what());
    }
  }

  if (j.contains("adaptive")) {
    const json& a = j["adaptive"];
    check_keys(a, "adaptive", {"enabled", "stage_override", "stage_growth", "max_stages", "eta"});
    if (a.contains("enabled")) c.adaptive.enabled = get_bool(a["enabled"], "adaptive.enabled");
    if (a.contains("stage_override"))
      c.adaptive.stage_override = get_count(a["stage_override"], "adaptive.stage_override");
    if (a.contains("stage_growth"))
      c.adaptive.stage_growth = get_count(a["stage_growth"], "adaptive.stage_growth");
    if (a.contains("max_stages"))
      c.adaptive.max_stages =
          static_cast<unsigned>(get_count(a["max_stages"], "adaptive.max_stages"));
    if (a.contains("eta")) c.adaptive.eta = get_number(a["eta"], "adaptive.eta");
  }

  if (!j.contains("traders")) config_error("config.traders", "missing");
  const json& ts = j["traders"];
  if (!ts.is_array()) config_error("traders", "expected an array");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const std::string path = "traders[" + std::to_string(i) + "]";
    const json& t = ts[i];
    check_keys(t, path, {"kind", "count", "belief", "threshold", "coordinate"});
    TraderSpec spec;
    if (!t.contains("kind")) config_error(path + ".kind", "missing");
    try {
      spec.kind = parse_strategy_kind(get_string(t["kind"], path + ".kind"));
    } catch (const Error& e) {
      config_error(path + ".kind", e.what());
    }
    if (t.contains("count")) spec.count = get_count(t["count"], path + ".count");
    if (t.contains("belief")) spec.params.belief = Prices(get_numbers(t["belief"], path + ".belief"));
    if (t.contains("threshold"))
      spec.params.threshold = get_number(t["threshold"], path + ".threshold");
    if (t.contains("coordinate"))
      spec.params.coordinate = get_count(t["coordinate"], path + ".coordinate");
    c.traders.push_back(std::move(spec));
  }

  if (j.contains("arrivals")) {
    const json& a = j["arrivals"];
    check_keys(a, "arrivals", {"order", "slots"});
    if (a.contains("order")) {
      std::string o = get_string(a["order"], "arrivals.order");
      if (o == "round_robin")
        c.order = ArrivalOrder::kRoundRobin;
      else if (o == "shuffled")
        c.order = ArrivalOrder::kShuffled;
      else
        config_error("arrivals.order", "expected round_robin or shuffled, got " + o);
    }
    if (a.contains("slots")) c.slots = get_count(a["slots"], "arrivals.slots");
  }

  if (j.contains("outcome")) {
    const json& o = j["outcome"];
    check_keys(o, "outcome", {"fixed", "distribution"});
    if (o.contains("fixed")) c.outcome.fixed = get_count(o["fixed"], "outcome.fixed");
    if (o.contains("distribution"))
      c.outcome.distribution = get_numbers(o["distribution"], "outcome.distribution");
  }

  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    check_keys(s, "seeds", {"first", "last"});
    if (s.contains("first")) c.seed_first = get_count(s["first"], "seeds.first");
    if (s.contains("last")) c.seed_last = get_count(s["last"], "seeds.last");
  }
  if (j.contains("output_dir")) c.output_dir = get_string(j["output_dir"], "output_dir");

  try {
    c.validate();
  } catch (const Error& e) {
    if (e.code() == Errc::kConfig) throw;
    config_error("config", e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(Errc::kConfig, path.string() + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  j["market"] = {{"d", market.d},
                 {"epsilon", market.epsilon},
                 {"alpha", market.alpha},
                 {"gamma", market.gamma},
                 {"T", market.T},
                 {"fee", opt(market.fee)},
                 {"lambda", opt(market.lambda)},
                 {"lambda_multiplier", opt(lambda_multiplier)},
                 {"noise_off", market.noise_off},
                 {"allow_unsafe_lambda", market.allow_unsafe_lambda},
                 {"cost", std::string(cost_kind_name(cost))}};
  j["adaptive"] = {{"enabled", adaptive.enabled},
                   {"stage_override", opt(adaptive.stage_override)},
                   {"stage_growth", adaptive.stage_growth},
                   {"max_stages", adaptive.max_stages},
                   {"eta", opt(adaptive.eta)}};
  j["traders"] = json::array();
  for (const TraderSpec& t : traders) {
    json e = {{"kind", std::string(strategy_kind_name(t.kind))}, {"count", t.count}};
    if (t.params.belief) e["belief"] = t.params.belief->values();
    if (t.params.threshold) e["threshold"] = *t.params.threshold;
    if (t.kind == StrategyKind::kHerd) e["coordinate"] = t.params.coordinate;
    j["traders"].push_back(e);
  }
  j["arrivals"] = {{"order", order_name(order)}, {"slots", opt(slots)}};
  j["outcome"] = {{"fixed", opt(outcome.fixed)}, {"distribution", opt(outcome.distribution)}};
  j["seeds"] = {{"first", seed_first}, {"last", seed_last}};
  j["output_dir"] = output_dir;
  // Drop nulls so the echo parses back into the same config.
  for (auto& [key, section] : j.items()) {
    if (!section.is_object()) continue;
    for (auto it = section.begin(); it != section.end();) {
      if (it->is_null())
        it = section.erase(it);
      else
        ++it;
    }
  }
  return j;
}

MarketParams RunConfig::effective_market() const {
  MarketParams p = market;
  if (lambda_multiplier) {
    MarketParams base = market;
    base.lambda.reset();
    p.lambda = *lambda_multiplier * base.resolved_lambda();
  }
  return p;
}

StageSchedule RunConfig::schedule() const {
  ScaledCost c(market.d, 1.0, cost);
  std::optional<double> first;
  if (adaptive.stage_override) first = static_cast<double>(*adaptive.stage_override);
  return stage_schedule(c.base_loss(), market.d, market.alpha, market.gamma, market.epsilon,
                        adaptive.max_stages, first, static_cast<double>(adaptive.stage_growth));
}

std::size_t RunConfig::roster_size() const {
  std::size_t n = 0;
  for (const TraderSpec& t : traders) n += t.count;
  return n;
}

std::uint64_t RunConfig::resolved_slots() const {
  if (slots) return *slots;
  const double n = static_cast<double>(roster_size());
  double horizon = static_cast<double>(market.T);
  if (adaptive.enabled) {
    horizon = 0.0;
    for (const StageParams& s : schedule().stages) horizon += s.horizon;
  }
  if (horizon * n > 1e9)
    fail(Errc::kConfig, "arrivals.slots: default stream exceeds 1e9 slots; set it explicitly");
  return static_cast<std::uint64_t>(horizon * n);
}

void RunConfig::validate() const {
  if (traders.empty()) config_error("traders", "at least one trader is required");
  if (roster_size() == 0) config_error("traders", "every count is zero");
  for (std::size_t i = 0; i < traders.size(); ++i) {
    const TraderSpec& t = traders[i];
    const std::string path = "traders[" + std::to_string(i) + "]";
    if (t.params.belief && t.params.belief->size() != market.d)
      config_error(path + ".belief", "length must equal market.d");
    if (t.kind == StrategyKind::kHerd && t.params.coordinate >= market.d)
      config_error(path + ".coordinate", "out of range");
    if (t.kind == StrategyKind::kBelief && !t.params.belief)
      config_error(path + ".belief", "required for belief traders");
  }
  if (outcome.fixed && outcome.distribution)
    config_error("outcome", "give either fixed or distribution, not both");
  if (outcome.fixed && *outcome.fixed >= market.d) config_error("outcome.fixed", "out of range");
  if (outcome.distribution) {
    const auto& p = *outcome.distribution;
    if (p.size() != market.d) config_error("outcome.distribution", "length must equal market.d");
    double s = 0.0;
    for (double x : p) {
      if (!(x >= 0.0)) config_error("outcome.distribution", "entries must be non-negative");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-9) config_error("outcome.distribution", "must sum to one");
  }
  if (seed_last < seed_first) config_error("seeds", "last is below first");
  if (lambda_multiplier && market.lambda)
    config_error("market.lambda_multiplier", "conflicts with market.lambda");
  if (lambda_multiplier && !(*lambda_multiplier > 0.0))
    config_error("market.lambda_multiplier", "must be positive");

  if (adaptive.enabled) {
    if (market.lambda || lambda_multiplier)
      config_error("market.lambda", "adaptive stages set their own lambda");
    if (adaptive.max_stages == 0) config_error("adaptive.max_stages", "must be at least 1");
    (void)schedule();
  } else {
    if (adaptive.stage_override) config_error("adaptive.stage_override", "needs adaptive.enabled");
    effective_market().validate();
  }
}

// ---------------------------------------------------------------- trials

json TrialMetrics::to_json() const {
  json j = {{"seed", seed},
            {"outcome", outcome},
            {"designer_loss", designer_loss},
            {"mm_loss", mm_loss},
            {"ntl", ntl},
            {"fees", fees},
            {"participant_payments", participant_payments},
            {"participant_payouts", participant_payouts},
            {"max_price_gap", max_price_gap},
            {"max_share_gap", max_share_gap},
            {"arrivals", arrivals},
            {"stages_completed", stages_completed},
            {"stages_run", stages_run},
            {"k_empirical", k_empirical},
            {"bundles", bundles},
            {"trader_profit", trader_profit}};
  json bp = json::array();
  for (const auto& b : trader_belief_profit) bp.push_back(opt(b));
  j["trader_belief_profit"] = bp;
  return j;
}

TrialMetrics TrialMetrics::from_json(const json& j) {
  TrialMetrics m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.outcome = j.at("outcome").get<std::size_t>();
    m.designer_loss = j.at("designer_loss").get<double>();
    m.mm_loss = j.at("mm_loss").get<double>();
    m.ntl = j.at("ntl").get<double>();
    m.fees = j.at("fees").get<double>();
    m.participant_payments = j.at("participant_payments").get<double>();
    m.participant_payouts = j.at("participant_payouts").get<double>();
    m.max_price_gap = j.at("max_price_gap").get<double>();
    m.max_share_gap = j.at("max_share_gap").get<double>();
    m.arrivals = j.at("arrivals").get<std::uint64_t>();
    m.stages_completed = j.at("stages_completed").get<unsigned>();
    m.stages_run = j.at("stages_run").get<unsigned>();
    m.k_empirical = j.at("k_empirical").get<double>();
    m.bundles = j.at("bundles").get<std::uint64_t>();
    m.trader_profit = j.at("trader_profit").get<std::vector<double>>();
    for (const json& b : j.at("trader_belief_profit"))
      m.trader_belief_profit.push_back(b.is_null() ? std::nullopt
                                                   : std::optional<double>(b.get<double>()));
  } catch (const json::exception& e) {
    fail(Errc::kIo, std::string("malformed trial row: ") + e.what());
  }
  return m;
}

TrialMetrics run_trial(const RunConfig& config, std::uint64_t seed) {
  const std::size_t d = config.market.d;
  const RngStream root(seed);

  std::vector<std::unique_ptr<Strategy>> roster;
  for (const TraderSpec& t : config.traders)
    for (std::size_t c = 0; c < t.count; ++c)
      roster.push_back(make_strategy(t.kind, t.params,
                                     root.substream(kTraderLabelBase + roster.size()), d));

  const std::uint64_t slots = config.resolved_slots();
  std::vector<std::size_t> arrivals(slots);
  RngStream arrival_rng = root.substream(kArrivalLabel);
  for (std::uint64_t i = 0; i < slots; ++i)
    arrivals[i] = config.order == ArrivalOrder::kRoundRobin
                      ? static_cast<std::size_t>(i % roster.size())
                      : static_cast<std::size_t>(arrival_rng.below(roster.size()));

  TrialMetrics m;
  m.seed = seed;
  if (config.outcome.fixed) {
    m.outcome = *config.outcome.fixed;
  } else {
    std::vector<double> p = config.outcome.distribution.value_or(
        std::vector<double>(d, 1.0 / static_cast<double>(d)));
    double u = root.substream(kOutcomeLabel).uniform();
    m.outcome = d - 1;
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      acc += p[j];
      if (u < acc) {
        m.outcome = j;
        break;
      }
    }
  }
  const OutcomeModel outcomes = OutcomeModel::complete(d);

  Ledger ledger;
  std::vector<TraderAccount> accounts;
  if (config.adaptive.enabled) {
    AdaptiveOptions opts;
    opts.kind = config.cost;
    opts.noise_off = config.market.noise_off;
    opts.eta = config.adaptive.eta;
    opts.fee = config.market.fee;
    AdaptiveResult r = run_adaptive(config.schedule(), roster, arrivals, outcomes, m.outcome,
                                    root.substream(kNoiseLabel), opts);
    ledger = r.global;
    accounts = std::move(r.accounts);
    m.max_price_gap = r.max_global_price_gap;
    m.max_share_gap = r.max_share_gap;
    m.stages_run = static_cast<unsigned>(r.stages.size());
    for (const StageResult& s : r.stages) m.stages_completed += s.completed ? 1 : 0;
  } else {
    MarketSession session = MarketSession::open(config.effective_market(), config.cost,
                                                root.substream(kNoiseLabel));
    accounts.resize(roster.size());
    for (TraderAccount& a : accounts) a.position = Shares(d);
    drive_arrivals(session, roster, arrivals, 0, accounts);
    ledger = session.close(outcomes, m.outcome);
    m.max_price_gap = session.max_price_gap();
    m.max_share_gap = session.max_share_gap();
    m.stages_run = 1;
    m.stages_completed = session.full() ? 1 : 0;
    double norm_sum = 0.0;
    if (!config.market.noise_off) {
      for (const NoiseBundle& b : session.noise().bundles()) {
        norm_sum += l2_norm(b.value.view());
        ++m.bundles;
      }
    }
    if (m.bundles > 0) m.k_empirical = norm_sum / static_cast<double>(m.bundles);
  }

  m.designer_loss = ledger.designer_loss;
  m.mm_loss = ledger.mm_loss;
  m.ntl = ledger.ntl;
  m.fees = ledger.fees;
  m.participant_payments = ledger.participant_payments;
  m.participant_payouts = ledger.participant_payouts;
  m.arrivals = ledger.arrivals;

  const std::vector<double>& payoff = outcomes.payoff(m.outcome);
  for (std::size_t i = 0; i < roster.size(); ++i) {
    const TraderAccount& a = accounts[i];
    const double cash = -a.payments - a.fees;
    m.trader_profit.push_back(dot(a.position.view(), payoff) + cash);
    if (const Prices* b = roster[i]->belief())
      m.trader_belief_profit.emplace_back(dot(a.position.view(), b->view()) + cash);
    else
      m.trader_belief_profit.emplace_back(std::nullopt);
  }
  return m;
}

std::vector<TrialMetrics> run_trials(const RunConfig& config, unsigned parallel) {
  config.validate();
  const std::uint64_t n = config.seed_last - config.seed_first + 1;
  std::vector<TrialMetrics> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t i = next++; i < n; i = next++) {
      try {
        out[i] = run_trial(config, config.seed_first + i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads =
      static_cast<unsigned>(std::clamp<std::uint64_t>(std::max(parallel, 1u), 1, n));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

json resolved_parameters(const RunConfig& config) {
  const MarketParams p = config.effective_market();
  const double B1 = ScaledCost(p.d, 1.0, config.cost).base_loss();
  json r = {{"d", p.d},
            {"epsilon", p.epsilon},
            {"alpha", p.alpha},
            {"gamma", p.gamma},
            {"fee", p.resolved_fee()},
            {"B1", B1},
            {"adaptive", config.adaptive.enabled},
            {"noise_off", p.noise_off},
            {"slots", config.resolved_slots()}};
  if (config.adaptive.enabled) {
    const StageSchedule s = config.schedule();
    double budget = 0.0;
    double horizon = 0.0;
    json stages = json::array();
    for (const StageParams& st : s.stages) {
      budget += B1 / st.lambda;
      horizon = std::max(horizon, st.horizon);
      stages.push_back({{"k", st.k},
                        {"horizon", st.horizon},
                        {"alpha", st.alpha},
                        {"gamma", st.gamma},
                        {"lambda", st.lambda}});
    }
    r["stages"] = stages;
    r["T"] = horizon;
    r["budget_bound"] = budget;
  } else {
    const double lambda = p.resolved_lambda();
    r["T"] = p.T;
    r["lambda"] = lambda;
    r["budget_bound"] = B1 / lambda;
    r["noise_scale"] = noise_scale(p.T, p.epsilon);
    r["K_bound"] = noise_scale_K(p.T, p.epsilon, p.d);
  }
  r["share_bound"] = share_accuracy_bound(r["T"].get<double>(), p.d, p.epsilon, p.gamma);
  return r;
}

std::string summary_csv(std::span<const TrialMetrics> trials, const json& resolved) {
  using Getter = double (*)(const TrialMetrics&);
  static const std::pair<const char*, Getter> kColumns[] = {
      {"designer_loss", [](const TrialMetrics& m) { return m.designer_loss; }},
      {"mm_loss", [](const TrialMetrics& m) { return m.mm_loss; }},
      {"ntl", [](const TrialMetrics& m) { return m.ntl; }},
      {"fees", [](const TrialMetrics& m) { return m.fees; }},
      {"max_price_gap", [](const TrialMetrics& m) { return m.max_price_gap; }},
      {"max_share_gap", [](const TrialMetrics& m) { return m.max_share_gap; }},
      {"arrivals", [](const TrialMetrics& m) { return static_cast<double>(m.arrivals); }},
      {"stages_completed",
       [](const TrialMetrics& m) { return static_cast<double>(m.stages_completed); }},
      {"k_empirical", [](const TrialMetrics& m) { return m.k_empirical; }},
  };
  const double alpha = resolved.at("alpha").get<double>();
  const double share_bound = resolved.at("share_bound").get<double>();

  std::string out = "metric,n,mean,std_error,min,max\n";
  auto row = [&](const std::string& name, const std::vector<double>& xs) {
    Moments m = moments(xs);
    out += name + "," + std::to_string(m.n) + "," + fmt(m.mean) + "," + fmt(m.se) + "," +
           fmt(m.min) + "," + fmt(m.max) + "\n";
  };
  for (const auto& [name, get] : kColumns) {
    std::vector<double> xs;
    for (const TrialMetrics& t : trials) xs.push_back(get(t));
    row(name, xs);
  }
  std::vector<double> price_exceed, share_exceed;
  for (const TrialMetrics& t : trials) {
    price_exceed.push_back(t.max_price_gap > alpha ? 1.0 : 0.0);
    share_exceed.push_back(t.max_share_gap > share_bound ? 1.0 : 0.0);
  }
  row("exceed_price_alpha", price_exceed);
  row("exceed_share_bound", share_exceed);
  return out;
}

void write_outputs(const std::filesystem::path& dir, const RunConfig& config,
                   std::span<const TrialMetrics> trials) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::kIo, "cannot create " + dir.string() + ": " + ec.message());
  const json resolved = resolved_parameters(config);
  json run = {{"config", config.to_json()}, {"resolved", resolved}, {"trials", trials.size()}};
  write_file(dir / "run.json", run.dump(2) + "\n");
  std::string rows;
  for (const TrialMetrics& t : trials) rows += t.to_json().dump() + "\n";
  write_file(dir / "trials.jsonl", rows);
  write_file(dir / "summary.csv", summary_csv(trials, resolved));
}

MetricsSet MetricsSet::load(const std::filesystem::path& dir) {
  MetricsSet s;
  try {
    s.run = json::parse(read_file(dir / "run.json"));
  } catch (const json::parse_error& e) {
    fail(Errc::kIo, "run.json: " + std::string(e.what()));
  }
  std::istringstream rows(read_file(dir / "trials.jsonl"));
  std::string line;
  while (std::getline(rows, line)) {
    if (line.empty()) continue;
    try {
      s.trials.push_back(TrialMetrics::from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      fail(Errc::kIo, "trials.jsonl: " + std::string(e.what()));
    }
  }
  s.summary = read_file(dir / "summary.csv");
  return s;
}

// ---------------------------------------------------------------- checks

json CheckReport::to_json() const {
  return {{"name", name},         {"passed", passed},       {"n", n},
          {"statistic", statistic}, {"threshold", threshold}, {"tolerance", tolerance},
          {"margin", margin},     {"detail", detail}};
}

CheckReport verify_precision(std::span<const TrialMetrics> trials, double alpha, double gamma) {
  require_seeds(trials, "precision");
  CheckReport r = exceedance("precision", trials, gamma,
                             [&](const TrialMetrics& m) { return m.max_price_gap > alpha; });
  r.detail["alpha"] = alpha;
  return r;
}

CheckReport verify_budget(std::span<const TrialMetrics> trials, double bound) {
  require_seeds(trials, "budget");
  std::vector<double> xs;
  for (const TrialMetrics& m : trials) xs.push_back(m.designer_loss);
  Moments mo = moments(xs);
  CheckReport r;
  r.name = "budget";
  r.n = mo.n;
  r.statistic = mo.mean;
  r.threshold = bound;
  r.tolerance = 3.0 * mo.se;
  r.margin = r.threshold + r.tolerance - r.statistic;
  r.passed = r.margin >= 0.0;
  r.detail["max_designer_loss"] = mo.max;
  return r;
}

CheckReport verify_share_accuracy(std::span<const TrialMetrics> trials, std::size_t d, double T,
                                  double epsilon, double gamma) {
  require_seeds(trials, "shares");
  const double bound = share_accuracy_bound(T, d, epsilon, gamma);
  CheckReport r = exceedance("shares", trials, gamma,
                             [&](const TrialMetrics& m) { return m.max_share_gap > bound; });
  r.detail["share_bound"] = bound;
  return r;
}

CheckReport verify_noise_loss(std::span<const TrialMetrics> trials, double lambda) {
  require_seeds(trials, "noise_loss");
  double norm_sum = 0.0;
  double count = 0.0;
  for (const TrialMetrics& m : trials) {
    norm_sum += m.k_empirical * static_cast<double>(m.bundles);
    count += static_cast<double>(m.bundles);
  }
  const double K = count > 0.0 ? norm_sum / count : 0.0;
  std::vector<double> ntl, bound;
  for (const TrialMetrics& m : trials) {
    ntl.push_back(m.ntl);
    const double tp = static_cast<double>(m.arrivals);
    bound.push_back(tp > 1.0 ? tp * std::log2(tp) / 2.0 * lambda * K : 0.0);
  }
  Moments mn = moments(ntl);
  Moments mb = moments(bound);
  CheckReport r;
  r.name = "noise_loss";
  r.n = mn.n;
  r.statistic = mn.mean;
  r.threshold = mb.mean;
  r.tolerance = 3.0 * mn.se;
  r.margin = r.threshold + r.tolerance - r.statistic;
  r.passed = r.margin >= 0.0;
  r.detail["K_pooled"] = K;
  return r;
}

json VerifyReport::to_json() const {
  json c = json::array();
  for (const CheckReport& r : checks) c.push_back(r.to_json());
  return {{"passed", passed}, {"checks", c}};
}

VerifyReport verify_metrics(const MetricsSet& metrics, const std::string& check) {
  static const char* kChecks[] = {"precision", "budget", "shares", "noise_loss", "summary", "all"};
  if (std::find_if(std::begin(kChecks), std::end(kChecks),
                   [&](const char* c) { return check == c; }) == std::end(kChecks))
    fail(Errc::kInvalidParameter, "unknown check: " + check);

  const json& res = metrics.run.at("resolved");
  const bool all = check == "all";
  const bool adaptive = res.value("adaptive", false);
  VerifyReport v;
  if (all || check == "precision")
    v.checks.push_back(verify_precision(metrics.trials, res.at("alpha").get<double>(),
                                        res.at("gamma").get<double>()));
  if (all || check == "budget")
    v.checks.push_back(verify_budget(metrics.trials, res.at("budget_bound").get<double>()));
  if (all || check == "shares")
    v.checks.push_back(verify_share_accuracy(
        metrics.trials, res.at("d").get<std::size_t>(), res.at("T").get<double>(),
        res.at("epsilon").get<double>(), res.at("gamma").get<double>()));
  if ((all && !adaptive) || check == "noise_loss") {
    if (adaptive) fail(Errc::kInvalidParameter, "noise_loss applies to single-stage runs");
    v.checks.push_back(verify_noise_loss(metrics.trials, res.at("lambda").get<double>()));
  }
  if (all || check == "summary") {
    CheckReport r;
    r.name = "summary";
    r.n = metrics.trials.size();
    r.passed = summary_csv(metrics.trials, res) == metrics.summary;
    r.detail["rederived_matches"] = r.passed;
    v.checks.push_back(r);
  }
  v.passed = std::all_of(v.checks.begin(), v.checks.end(),
                         [](const CheckReport& r) { return r.passed; });
  return v;
}

// ---------------------------------------------------------------- privacy

json PrivacyAuditReport::to_json() const {
  return {{"T", T},
          {"d", d},
          {"epsilon", epsilon},
          {"pairs", pairs},
          {"max_partial_sum_change", max_partial_sum_change},
          {"sensitivity_violations", sensitivity_violations},
          {"participation_counts", participation_counts},
          {"max_participation", max_participation},
          {"participation_bound", participation_bound},
          {"participation_mismatches", participation_mismatches},
          {"tree_depth", tree_depth},
          {"implied_epsilon_multiplier", implied_epsilon_multiplier},
          {"configured_noise_scale", configured_noise_scale},
          {"expected_noise_scale", expected_noise_scale},
          {"passed", passed}};
}

PrivacyAuditReport privacy_audit(std::uint64_t T, std::size_t d, double epsilon,
                                 std::size_t pairs, std::uint64_t seed) {
  require(T >= 2 && T <= (std::uint64_t{1} << 14), Errc::kInvalidParameter,
          "audit needs 2 <= T <= 2^14");
  require(d >= 1, Errc::kInvalidParameter, "audit needs d >= 1");
  require(std::isfinite(epsilon) && epsilon > 0.0, Errc::kInvalidParameter,
          "audit needs epsilon > 0");
  require(pairs >= 1, Errc::kInvalidParameter, "audit needs at least one pair");

  PrivacyAuditReport r;
  r.T = T;
  r.d = d;
  r.epsilon = epsilon;
  r.pairs = pairs;
  r.tree_depth = tree_depth(T);
  r.participation_bound = static_cast<std::uint64_t>(std::bit_width(T));

  // Participation: the closed form against a brute-force count over (s(t), t].
  r.participation_counts.resize(T);
  for (std::uint64_t tp = 1; tp <= T; ++tp) {
    std::uint64_t brute = 0;
    for (std::uint64_t t = tp; t <= T; ++t) brute += (s_flip(t) < tp) ? 1 : 0;
    const std::uint64_t fast = participation_count(tp, T);
    if (fast != brute) ++r.participation_mismatches;
    r.participation_counts[tp - 1] = brute;
    r.max_participation = std::max(r.max_participation, brute);
  }

  // Neighbouring streams differ in one trade; every released node sum
  // P(t) - P(s(t)) is recomputed from prefix sums of both streams.
  RngStream rng(seed);
  auto random_trade = [&](Shares& out) {
    if (rng.uniform() < 0.5) {
      // Signed unit trades hit the extreme points of the l1 ball.
      const std::size_t j = static_cast<std::size_t>(rng.below(d));
      out = unit_shares(d, j, rng.uniform() < 0.5 ? -1.0 : 1.0);
      return;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      out[j] = rng.uniform() - 0.5;
      total += std::abs(out[j]);
    }
    const double size = rng.uniform();
    for (std::size_t j = 0; j < d; ++j) out[j] = total > 0.0 ? out[j] / total * size : 0.0;
  };
  std::vector<Shares> stream(T + 1, Shares(d));
  std::vector<Shares> prefix_a(T + 1, Shares(d)), prefix_b(T + 1, Shares(d));
  Shares swapped(d);
  for (std::size_t pair = 0; pair < pairs; ++pair) {
    for (std::uint64_t t = 1; t <= T; ++t) random_trade(stream[t]);
    const std::uint64_t tp = 1 + rng.below(T);
    random_trade(swapped);
    for (std::uint64_t t = 1; t <= T; ++t) {
      prefix_a[t] = prefix_a[t - 1] + stream[t];
      prefix_b[t] = prefix_b[t - 1] + (t == tp ? swapped : stream[t]);
    }
    // Each released node sum may move by at most ||dq - dq'||_1 <= 2.
    for (std::uint64_t t = 1; t <= T; ++t) {
      const std::uint64_t s = s_flip(t);
      const double change = l1_distance(prefix_a[t] - prefix_a[s], prefix_b[t] - prefix_b[s]);
      if (change > 2.0 + 1e-12) ++r.sensitivity_violations;
      r.max_partial_sum_change = std::max(r.max_partial_sum_change, change);
    }
  }

  r.implied_epsilon_multiplier =
      static_cast<double>(r.max_participation) / static_cast<double>(r.tree_depth);

  MarketParams p;
  p.d = d;
  p.epsilon = epsilon;
  p.T = T;
  MarketSession session = MarketSession::open(p, CostKind::kLmsr, seed);
  r.configured_noise_scale = session.noise().scale();
  r.expected_noise_scale =
      2.0 * std::max(std::ceil(std::log2(static_cast<double>(T))), 1.0) / epsilon;

  r.passed = r.sensitivity_violations == 0 && r.participation_mismatches == 0 &&
             r.max_participation <= r.participation_bound &&
             std::abs(r.configured_noise_scale - r.expected_noise_scale) <=
                 1e-12 * r.expected_noise_scale;
  return r;
}

json schedule_report(const StageSchedule& s, unsigned k_max) {
  json stages = json::array();
  for (const StageParams& st : s.stages)
    stages.push_back({{"k", st.k},
                      {"horizon", st.horizon},
                      {"alpha", st.alpha},
                      {"gamma", st.gamma},
                      {"lambda", st.lambda}});
  const StageInequalityReport ineq = verify_stage_inequalities(s, k_max);
  json checks = json::array();
  for (const StageCheck& c : ineq.stages)
    checks.push_back({{"k", c.k},
                      {"loss", c.loss},
                      {"loss_cap", c.loss_cap},
                      {"loss_ok", c.loss_ok},
                      {"profit_bracket", c.profit_bracket},
                      {"profit_ok", c.profit_ok},
                      {"lambda_ratio", c.lambda_ratio},
                      {"lambda_ratio_ok", c.lambda_ratio_ok}});
  return {{"B1", s.B1},
          {"d", s.d},
          {"alpha", s.alpha},
          {"gamma", s.gamma},
          {"epsilon", s.epsilon},
          {"A_prime", s.A_prime},
          {"A", s.A},
          {"D", s.D},
          {"first_horizon", s.stages.empty() ? 0.0 : s.stages.front().horizon},
          {"first_horizon_formula", s.first_horizon_formula},
          {"first_horizon_closed_form", s.first_horizon_closed_form},
          {"overridden", s.overridden},
          {"growth", s.growth},
          {"budget_bound", budget_bound(s.B1, s.d, s.alpha, s.gamma, s.epsilon)},
          {"stages", stages},
          {"inequalities",
           {{"stages", checks},
            {"first_stage_ratio", ineq.first_stage_ratio},
            {"first_stage_ok", ineq.first_stage_ok},
            {"lambda_ratio_holds_from", opt(ineq.lambda_ratio_holds_from)},
            {"all_pass", ineq.all_pass}}}};
}

}  // namespace privmarket
