// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

namespace testing_support {

// Short sentences over a small vocabulary with stem variants, so that
// n-gram overlap, stem matches and repeated words all occur.
inline std::vector<std::string> random_sentence(std::mt19937_64& rng, std::size_t min_len = 1,
                                                std::size_t max_len = 8) {
  static const char* words[] = {"the", "cat", "cats", "sat", "on", "mat", "dog", "runs",
                                "running", "run", "a", "quickly", "quick", "big"};
  const std::size_t len = min_len + rng() % (max_len - min_len + 1);
  std::vector<std::string> s;
  for (std::size_t i = 0; i < len; ++i) s.emplace_back(words[rng() % (sizeof words / sizeof *words)]);
  return s;
}

}  // namespace testing_support
