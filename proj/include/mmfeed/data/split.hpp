// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmfeed/data/sample.hpp"

namespace mmfeed::data {

enum class SplitMode { Holdout80_20, KFold5, Low, Mid, High, All };

SplitMode parse_split_mode(std::string_view name);  // throws on unknown names
std::string to_string(SplitMode mode);

// Comment-count ranges; they overlap on purpose (31..50 is both mid and high).
inline constexpr std::size_t kLowMaxComments = 5;
inline constexpr std::size_t kMidMinComments = 13;
inline constexpr std::size_t kMidMaxComments = 50;
inline constexpr std::size_t kHighMinComments = 31;

bool in_comment_range(const Sample& sample, SplitMode mode);

// Indices of the articles a mode selects: the comment range for low, mid and
// high, everything otherwise.
std::vector<std::size_t> select_articles(std::span<const Sample> samples, SplitMode mode);

// Article indices; train and test are disjoint except in mode all.
struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// holdout80_20: one seeded 80/20 partition.
// kfold5: five partitions, fold i as test.
// low/mid/high: seeded 80/20 holdout over the articles in range.
// all: every article in both train and test (memorization runs).
std::vector<Partition> split_dataset(std::span<const Sample> samples, SplitMode mode, std::uint64_t seed);

// Seeded Fisher-Yates permutation of 0..n-1, identical on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// Splits off round(fraction * n) indices (at most n - 1 when n > 0) from the
// front of a seeded permutation of `indices`.
Partition holdout(std::span<const std::size_t> indices, double test_fraction, std::uint64_t seed);

}  // namespace mmfeed::data
