// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/data/stats.hpp"

#include "mmfeed/data/text.hpp"

namespace mmfeed::data {

CorpusStats corpus_stats(std::span<const Sample> samples) {
  CorpusStats st;
  st.n_articles = samples.size();
  double likes = 0, text_words = 0, comment_words = 0;
  for (const Sample& s : samples) {
    st.n_samples += s.comments.size();
    text_words += static_cast<double>(count_words(s.text));
    for (const Comment& c : s.comments) {
      likes += static_cast<double>(c.likes);
      comment_words += static_cast<double>(count_words(c.text));
    }
  }
  if (st.n_articles > 0) {
    st.avg_comments_per_article = static_cast<double>(st.n_samples) / static_cast<double>(st.n_articles);
    st.avg_text_len_words = text_words / static_cast<double>(st.n_articles);
  }
  if (st.n_samples > 0) {
    st.avg_likes_per_comment = likes / static_cast<double>(st.n_samples);
    st.avg_comment_len_words = comment_words / static_cast<double>(st.n_samples);
  }
  return st;
}

}  // namespace mmfeed::data
