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

#ifndef PRIVMARKET_RNG_HPP_
#define PRIVMARKET_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace privmarket {

// Explicitly keyed random stream. Child streams are derived from the parent
// key plus a label, never from the parent's draws, so actors seeded from the
// same trial seed stay independent of each other's consumption.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : RngStream(std::vector<std::uint64_t>{seed}) {}

  RngStream substream(std::uint64_t label) const {
    std::vector<std::uint64_t> key = key_;
    key.push_back(label);
    return RngStream(std::move(key));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    for (;;) {
      double u = uniform();
      if (u > 0.0) return u;
    }
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection keeps the draw unbiased and platform independent.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
      std::uint64_t x = engine_();
      if (x < limit) return x % n;
    }
  }

  const std::vector<std::uint64_t>& key() const { return key_; }

 private:
  explicit RngStream(std::vector<std::uint64_t> key) : key_(std::move(key)) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * key_.size() + 1);
    words.push_back(0x70726d6bu);
    for (std::uint64_t k : key_) {
      words.push_back(static_cast<std::uint32_t>(k));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }

  std::vector<std::uint64_t> key_;
  std::mt19937_64 engine_;
};

}  // namespace privmarket

#endif  // PRIVMARKET_RNG_HPP_
