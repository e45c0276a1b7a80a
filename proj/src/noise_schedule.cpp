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

#include "privmarket/noise_schedule.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "privmarket/error.hpp"

namespace privmarket {

std::uint64_t low_bit(std::uint64_t t) {
  require(t >= 1, Errc::kInvalidParameter, "low_bit requires t >= 1");
  return t & (~t + 1);
}

std::uint64_t ceil_log2(std::uint64_t T) {
  require(T >= 1, Errc::kInvalidParameter, "ceil_log2 requires T >= 1");
  return static_cast<std::uint64_t>(std::bit_width(T - 1));
}

std::uint64_t tree_depth(std::uint64_t T) { return std::max<std::uint64_t>(ceil_log2(T), 1); }

double noise_scale(std::uint64_t T, double epsilon) {
  require(epsilon > 0.0, Errc::kInvalidParameter, "epsilon must be positive");
  return 2.0 * static_cast<double>(tree_depth(T)) / epsilon;
}

ScheduleEvent events_at(std::uint64_t t) {
  require(t >= 1, Errc::kInvalidParameter, "events_at requires t >= 1");
  ScheduleEvent ev;
  ev.buy = t;
  // Incrementing t-1 clears its trailing ones; each cleared bit was bought at
  // t-1, t-1-1, t-1-1-2, ... which is t-1, t-2, t-4, ...
  for (std::uint64_t step = 1; step < low_bit(t); step <<= 1) ev.sells.push_back(t - step);
  return ev;
}

std::vector<std::uint64_t> noise_path(std::uint64_t t) {
  std::vector<std::uint64_t> path;
  for (std::uint64_t s = t; s != 0; s = s_flip(s)) path.push_back(s);
  return path;
}

Shares noise_path_sum(std::uint64_t t, std::span<const Shares> bundles) {
  Shares total;
  for (std::uint64_t s : noise_path(t)) {
    if (s > bundles.size() || bundles[s - 1].empty())
      fail(Errc::kInvalidState, "missing noise bundle for time " + std::to_string(s));
    const Shares& z = bundles[s - 1];
    if (total.empty()) total = Shares(z.size());
    if (z.size() != total.size())
      fail(Errc::kInvalidState, "noise bundles differ in dimension");
    total += z;
  }
  return total;
}

std::uint64_t participation_count(std::uint64_t t_prime, std::uint64_t T) {
  require(t_prime >= 1 && t_prime <= T, Errc::kInvalidParameter,
          "participation_count requires 1 <= t' <= T");
  // The qualifying t are the Fenwick update chain starting at t'.
  std::uint64_t count = 0;
  for (std::uint64_t t = t_prime; t <= T; t += low_bit(t)) {
    ++count;
    if (t > UINT64_MAX - low_bit(t)) break;
  }
  return count;
}

std::uint64_t low_bit_sum(std::uint64_t T_prime) {
  std::uint64_t s = 0;
  for (std::uint64_t t = 1; t <= T_prime; ++t) s += low_bit(t);
  return s;
}

std::uint64_t bundle_exposure_sum(std::uint64_t T_prime) {
  std::uint64_t s = 0;
  for (std::uint64_t t = 1; t <= T_prime; ++t) s += std::min(low_bit(t), T_prime - t);
  return s;
}

double sample_laplace(double scale, RngStream& rng) {
  const double u = rng.uniform_open() - 0.5;
  const double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -magnitude : magnitude;
}

Shares sample_bundle(std::size_t d, double scale, RngStream& rng) {
  if (!(scale > 0.0))
    fail(Errc::kInvalidParameter, "Laplace scale must be positive, got " + std::to_string(scale));
  Shares z(d);
  for (double& x : z) x = sample_laplace(scale, rng);
  return z;
}

NoiseLedger::NoiseLedger(std::size_t d, double scale, RngStream rng, bool noise_off)
    : d_(d), scale_(scale), rng_(std::move(rng)), noise_off_(noise_off) {
  require(d >= 1, Errc::kInvalidParameter, "noise ledger needs d >= 1");
  if (!(scale > 0.0)) fail(Errc::kInvalidParameter, "Laplace scale must be positive");
}

const NoiseBundle& NoiseLedger::bundle(std::uint64_t time) const {
  if (time < 1 || time > bundles_.size())
    fail(Errc::kInvalidState, "no noise bundle at time " + std::to_string(time));
  return bundles_[time - 1];
}

Shares NoiseLedger::held_sum() const {
  Shares s(d_);
  for (std::uint64_t time : held_) s += bundles_[time - 1].value;
  return s;
}

NoiseLedger::StepActions NoiseLedger::advance(const Charge& charge) {
  require(!closed_, Errc::kInvalidState, "noise ledger already closed out");
  const std::uint64_t t = t_ + 1;
  const ScheduleEvent ev = events_at(t);
  StepActions out;
  out.t = t;
  out.net = Shares(d_);

  for (std::uint64_t s : ev.sells) {
    if (held_.empty() || held_.back() != s)
      fail(Errc::kInvalidState, "noise schedule out of order: expected to sell bundle " +
                                    std::to_string(s) + " at step " + std::to_string(t));
    NoiseBundle& b = bundles_[s - 1];
    const Shares delta = -b.value;
    b.sell_cost = charge(delta);
    b.sold_at = t;
    out.charged += b.sell_cost;
    out.net += delta;
    out.sold.push_back(s);
    held_.pop_back();
  }

  NoiseBundle fresh;
  fresh.time = t;
  fresh.value = noise_off_ ? Shares(d_) : sample_bundle(d_, scale_, rng_);
  fresh.buy_cost = charge(fresh.value);
  out.charged += fresh.buy_cost;
  out.net += fresh.value;
  out.bought = t;
  bundles_.push_back(std::move(fresh));
  held_.push_back(t);
  t_ = t;

  check_held_matches_binary();
  return out;
}

NoiseLedger::StepActions NoiseLedger::close_out(const Charge& charge) {
  require(!closed_, Errc::kInvalidState, "noise ledger already closed out");
  StepActions out;
  out.t = t_;
  out.net = Shares(d_);
  while (!held_.empty()) {
    NoiseBundle& b = bundles_[held_.back() - 1];
    const Shares delta = -b.value;
    b.sell_cost = charge(delta);
    b.sold_at = t_ + 1;
    b.sold_at_close = true;
    out.charged += b.sell_cost;
    out.net += delta;
    out.sold.push_back(b.time);
    held_.pop_back();
  }
  closed_ = true;
  return out;
}

void NoiseLedger::check_held_matches_binary() const {
  std::vector<std::uint64_t> path = noise_path(t_);
  std::reverse(path.begin(), path.end());
  if (!std::equal(path.begin(), path.end(), held_.begin(), held_.end()))
    fail(Errc::kInvalidState,
         "held noise bundles diverged from the binary expansion of t=" + std::to_string(t_));
}

}  // namespace privmarket
