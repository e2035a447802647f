// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mmfeed/error.hpp"

namespace mmfeed::data {

SplitMode parse_split_mode(std::string_view name) {
  if (name == "holdout80_20") return SplitMode::Holdout80_20;
  if (name == "kfold5") return SplitMode::KFold5;
  if (name == "low") return SplitMode::Low;
  if (name == "mid") return SplitMode::Mid;
  if (name == "high") return SplitMode::High;
  if (name == "all") return SplitMode::All;
  throw Error("unknown split mode \"" + std::string(name) +
              "\" (expected holdout80_20, kfold5, low, mid, high or all)");
}

std::string to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::Holdout80_20: return "holdout80_20";
    case SplitMode::KFold5: return "kfold5";
    case SplitMode::Low: return "low";
    case SplitMode::Mid: return "mid";
    case SplitMode::High: return "high";
    case SplitMode::All: return "all";
  }
  return "?";
}

bool in_comment_range(const Sample& sample, SplitMode mode) {
  const std::size_t n = sample.comments.size();
  switch (mode) {
    case SplitMode::Low: return n <= kLowMaxComments;
    case SplitMode::Mid: return n >= kMidMinComments && n <= kMidMaxComments;
    case SplitMode::High: return n >= kHighMinComments;
    default: return true;
  }
}

std::vector<std::size_t> select_articles(std::span<const Sample> samples, SplitMode mode) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (in_comment_range(samples[i], mode)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

Partition holdout(std::span<const std::size_t> indices, double test_fraction, std::uint64_t seed) {
  const std::size_t n = indices.size();
  std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n > 0 && n_test >= n) n_test = n - 1;
  const auto perm = seeded_permutation(n, seed);
  Partition part;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_test ? part.test : part.train).push_back(indices[perm[i]]);
  }
  std::sort(part.train.begin(), part.train.end());
  std::sort(part.test.begin(), part.test.end());
  return part;
}

std::vector<Partition> split_dataset(std::span<const Sample> samples, SplitMode mode, std::uint64_t seed) {
  if (mode == SplitMode::KFold5) {
    constexpr std::size_t k = 5;
    const auto perm = seeded_permutation(samples.size(), seed);
    std::vector<Partition> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
      for (std::size_t i = 0; i < perm.size(); ++i) {
        (i % k == f ? folds[f].test : folds[f].train).push_back(perm[i]);
      }
      std::sort(folds[f].train.begin(), folds[f].train.end());
      std::sort(folds[f].test.begin(), folds[f].test.end());
    }
    return folds;
  }
  const auto selected = select_articles(samples, mode);
  if (mode == SplitMode::All) return {Partition{selected, selected}};
  return {holdout(selected, 0.2, seed)};
}

}  // namespace mmfeed::data
