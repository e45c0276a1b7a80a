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

#ifndef PRIVMARKET_ERROR_HPP_
#define PRIVMARKET_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace privmarket {

// Numeric values are part of the C ABI (see privmarket.h); append only.
enum class Errc {
  kInvalidParameter = 1,
  kInvalidState = 2,
  kTradeRejected = 3,
  kMarketClosed = 4,
  kNotImplemented = 5,
  kInsufficientData = 6,
  kStrategyBug = 7,
  kIo = 8,
  kConfig = 9,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, Errc code, const char* message) {
  if (!condition) fail(code, message);
}

}  // namespace privmarket

#endif  // PRIVMARKET_ERROR_HPP_
