// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace mmfeed::eval {

using Tokens = std::vector<std::string>;
using References = std::vector<Tokens>;

// --- BLEU-4 ------------------------------------------------------------------

struct BleuStats {
  std::array<std::size_t, 4> matches{};  // clipped n-gram matches, n = 1..4
  std::array<std::size_t, 4> totals{};   // candidate n-grams
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;  // closest reference length, shorter on ties

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const Tokens& candidate, const References& references);

// Geometric mean of the four precisions times the brevity penalty. A zero
// unigram match count gives 0; for n >= 2 a zero match count is replaced by
// 1 / (totals[n] + 1).
double bleu_from_stats(const BleuStats& stats);

// Sentence BLEU-4. Throws on an empty candidate or no references.
double bleu4(const Tokens& candidate, const References& references);
// Counts summed over the corpus before combining.
double corpus_bleu4(std::span<const Tokens> candidates, std::span<const References> references);

// --- ROUGE-L -----------------------------------------------------------------

std::size_t lcs_length(const Tokens& a, const Tokens& b);
// LCS F1, best over references. Throws on no references.
double rouge_l(const Tokens& candidate, const References& references);

// --- METEOR (exact and stem matching, no synonyms) ----------------------------

// Light English suffix stripper shared by the matcher.
std::string stem(const std::string& word);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t exact = 0;
  std::size_t chunks = 0;
};

// One-to-one alignment maximizing (exact matches, total matches, -chunks)
// in that order; pairs match when equal or when their stems agree.
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference);

// Fmean = 10PR / (R + 9P), penalty = 0.5 (chunks / matches)^3,
// score = Fmean (1 - penalty); best over references.
double meteor(const Tokens& candidate, const References& references);
double meteor_score(const MeteorAlignment& a, std::size_t candidate_length, std::size_t reference_length);

// --- CIDEr -------------------------------------------------------------------

// Plain CIDEr over a corpus: n-gram (n = 1..4) TF-IDF vectors with
// idf = log(N) - log(max(1, df)), df counted over each document's reference
// set, cosine per n averaged over n and references, times 10. Returns the
// per-document scores; throws on an empty corpus.
std::vector<double> cider_scores(std::span<const Tokens> candidates, std::span<const References> references);
double cider(std::span<const Tokens> candidates, std::span<const References> references);

}  // namespace mmfeed::eval
