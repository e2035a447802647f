// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace mmfeed {

using TokenId = std::int32_t;
using TokenIds = std::vector<TokenId>;

// Reserved vocabulary ids.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;

}  // namespace mmfeed
