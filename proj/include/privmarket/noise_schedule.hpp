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

#ifndef PRIVMARKET_NOISE_SCHEDULE_HPP_
#define PRIVMARKET_NOISE_SCHEDULE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "privmarket/rng.hpp"
#include "privmarket/vector.hpp"

namespace privmarket {

// Largest power of two dividing t (t >= 1).
std::uint64_t low_bit(std::uint64_t t);

// Clears the lowest set bit; s_flip(0) == 0.
constexpr std::uint64_t s_flip(std::uint64_t t) { return t == 0 ? 0 : t & (t - 1); }

// ceil(log2(T)) for T >= 1.
std::uint64_t ceil_log2(std::uint64_t T);

// Tree depth used by the noise scale; never below one so that T = 1 still
// draws noise.
std::uint64_t tree_depth(std::uint64_t T);

// Laplace scale b = 2 * tree_depth(T) / epsilon of each noise coordinate.
double noise_scale(std::uint64_t T, double epsilon);

// Noise-trader actions at step t: sell the listed bundles (most recent
// first), then buy bundle t. The sells are the trailing one-bits of t - 1,
// i.e. for t = 2^j * m with m odd, times t-1, t-2, t-4, ..., t-2^(j-1).
struct ScheduleEvent {
  std::uint64_t buy = 0;
  std::vector<std::uint64_t> sells;
};

ScheduleEvent events_at(std::uint64_t t);

// The times t, s(t), s(s(t)), ... (excluding 0), largest first.
std::vector<std::uint64_t> noise_path(std::uint64_t t);

// Sum of z at the times on noise_path(t). bundles[i] holds z^(i+1); an empty
// entry counts as missing.
Shares noise_path_sum(std::uint64_t t, std::span<const Shares> bundles);

// Number of t in [t_prime, T] with s(t) < t_prime <= t, i.e. how many noisy
// partial sums contain trade t_prime.
std::uint64_t participation_count(std::uint64_t t_prime, std::uint64_t T);

// Sum over t = 1..T' of low_bit(t).
std::uint64_t low_bit_sum(std::uint64_t T_prime);

// Sum over t = 1..T' of the number of arrivals between the purchase of z^t
// and its sale when the remaining bundles are sold back after arrival T':
// min(low_bit(t), T' - t).
std::uint64_t bundle_exposure_sum(std::uint64_t T_prime);

double sample_laplace(double scale, RngStream& rng);

// d i.i.d. Laplace(scale) coordinates by inverse CDF.
Shares sample_bundle(std::size_t d, double scale, RngStream& rng);

struct NoiseBundle {
  std::uint64_t time = 0;
  Shares value;
  std::optional<std::uint64_t> sold_at;
  bool sold_at_close = false;
  double buy_cost = 0.0;
  double sell_cost = 0.0;

  // Net loss of the noise trader on this bundle once sold.
  double realized_loss() const { return buy_cost + sell_cost; }
};

// Noise-trader bookkeeping for one market. The held set is a stack in
// purchase order; after step t it equals noise_path(t) (reversed).
class NoiseLedger {
 public:
  // Called once per noise trade with the share delta (+z on purchase, -z on
  // sale); returns what the noise trader is charged for it.
  using Charge = std::function<double(const Shares& delta)>;

  struct StepActions {
    std::uint64_t t = 0;
    std::vector<std::uint64_t> sold;
    std::uint64_t bought = 0;
    Shares net;  // w^t = z^t - sum of sold bundles
    double charged = 0.0;
  };

  NoiseLedger(std::size_t d, double scale, RngStream rng, bool noise_off = false);

  StepActions advance(const Charge& charge);

  // Sells every remaining bundle in reverse purchase order. Returns the times
  // sold and the total charge.
  StepActions close_out(const Charge& charge);

  std::uint64_t t() const noexcept { return t_; }
  std::size_t d() const noexcept { return d_; }
  double scale() const noexcept { return scale_; }
  bool noise_off() const noexcept { return noise_off_; }
  bool closed() const noexcept { return closed_; }

  std::span<const NoiseBundle> bundles() const noexcept { return bundles_; }
  const NoiseBundle& bundle(std::uint64_t time) const;
  std::span<const std::uint64_t> held() const noexcept { return held_; }
  Shares held_sum() const;

 private:
  void check_held_matches_binary() const;

  std::size_t d_;
  double scale_;
  RngStream rng_;
  bool noise_off_;
  bool closed_ = false;
  std::uint64_t t_ = 0;
  std::vector<NoiseBundle> bundles_;
  std::vector<std::uint64_t> held_;
};

}  // namespace privmarket

#endif  // PRIVMARKET_NOISE_SCHEDULE_HPP_
