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

#include "privmarket/error.hpp"

namespace privmarket {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidParameter: return "invalid-parameter";
    case Errc::kInvalidState: return "invalid-state";
    case Errc::kTradeRejected: return "trade-rejected";
    case Errc::kMarketClosed: return "market-closed";
    case Errc::kNotImplemented: return "not-implemented";
    case Errc::kInsufficientData: return "insufficient-data";
    case Errc::kStrategyBug: return "strategy-bug";
    case Errc::kIo: return "io";
    case Errc::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace privmarket
