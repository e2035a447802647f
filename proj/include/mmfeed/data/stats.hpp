// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "mmfeed/data/sample.hpp"

namespace mmfeed::data {

struct CorpusStats {
  std::size_t n_articles = 0;
  std::size_t n_samples = 0;  // (article, comment) pairs
  double avg_comments_per_article = 0;
  double avg_likes_per_comment = 0;
  double avg_text_len_words = 0;
  double avg_comment_len_words = 0;
};

// Word counts split on whitespace. All means are 0 for an empty corpus.
CorpusStats corpus_stats(std::span<const Sample> samples);

}  // namespace mmfeed::data
