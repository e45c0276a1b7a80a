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

#ifndef PRIVMARKET_VECTOR_HPP_
#define PRIVMARKET_VECTOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace privmarket {

// Dense real vector tagged with the quantity it holds, so share states and
// price vectors cannot be mixed up at call sites.
template <class Tag>
class BasicVector {
 public:
  BasicVector() = default;
  explicit BasicVector(std::size_t n, double fill = 0.0) : v_(n, fill) {}
  BasicVector(std::initializer_list<double> init) : v_(init) {}
  explicit BasicVector(std::vector<double> values) : v_(std::move(values)) {}
  explicit BasicVector(std::span<const double> values)
      : v_(values.begin(), values.end()) {}

  std::size_t size() const noexcept { return v_.size(); }
  bool empty() const noexcept { return v_.empty(); }

  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  auto begin() noexcept { return v_.begin(); }
  auto end() noexcept { return v_.end(); }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }

  std::span<const double> view() const noexcept { return v_; }
  std::span<double> view() noexcept { return v_; }
  const std::vector<double>& values() const noexcept { return v_; }

  BasicVector& operator+=(const BasicVector& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  BasicVector& operator-=(const BasicVector& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  BasicVector& operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
  }

  friend BasicVector operator+(BasicVector a, const BasicVector& b) {
    return a += b;
  }
  friend BasicVector operator-(BasicVector a, const BasicVector& b) {
    return a -= b;
  }
  friend BasicVector operator-(BasicVector a) { return a *= -1.0; }
  friend BasicVector operator*(double s, BasicVector a) { return a *= s; }

  friend bool operator==(const BasicVector&, const BasicVector&) = default;

 private:
  std::vector<double> v_;
};

struct SharesTag;
struct PricesTag;

// Share quantities (market states, trade bundles, noise bundles).
using Shares = BasicVector<SharesTag>;
// Per-share prices; for a complete market these lie on the simplex.
using Prices = BasicVector<PricesTag>;

inline double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline Shares unit_shares(std::size_t d, std::size_t j, double sign = 1.0) {
  Shares e(d);
  e[j] = sign;
  return e;
}

template <class Tag>
double l1_distance(const BasicVector<Tag>& a, const BasicVector<Tag>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace privmarket

#endif  // PRIVMARKET_VECTOR_HPP_
