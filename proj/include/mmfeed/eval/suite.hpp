// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmfeed/data/sample.hpp"
#include "mmfeed/eval/ranking.hpp"
#include "mmfeed/region/region.hpp"
#include "mmfeed/train/train.hpp"

namespace mmfeed::eval {

// Mean-pooled encoder output of the checkpoint's text encoder. Texts are
// encoded like article bodies; vectors are cached per text.
EmbeddingProvider encoder_provider(const train::Checkpoint& ckpt);

// Produces the feedback text for one article.
using Generator = std::function<std::string(const data::Sample&)>;

// Greedy decoding with the checkpoint; tokens joined by single spaces.
Generator model_generator(const train::Checkpoint& ckpt, const region::RegionMap* regions);

struct EvalReport {
  double bleu4 = 0;    // corpus BLEU-4
  double cider = 0;    // plain CIDEr, 0..10
  double rouge_l = 0;  // mean over articles
  double meteor = 0;   // mean over articles
  double mrr = 0;
  std::map<std::size_t, double> recall_at;  // k -> percentage
  std::string provider;
  std::size_t n_articles = 0;

  // Metric keys in column order: bleu4, cider, rouge_l, meteor, mrr, recall@k...
  std::vector<std::pair<std::string, double>> metrics() const;
};

struct ArticleResult {
  std::string id;
  std::string generated;
  RankResult rank;
};

struct SuiteResult {
  EvalReport report;
  std::vector<ArticleResult> articles;
};

inline constexpr std::size_t kDefaultKs[] = {1, 3, 5, 7};

// Generates feedback for every article with comments and scores it against
// that article's comments. Throws if no article has comments.
SuiteResult evaluate_suite(std::span<const data::Sample> test, const Generator& generate,
                           const EmbeddingProvider& provider, std::span<const std::size_t> ks = kDefaultKs);

// Header line plus one data line.
std::string report_csv(const EvalReport& report);
// Aligned two-row table for terminals.
std::string report_table(const EvalReport& report);

// Human-rating sheet: id, text_excerpt, image_ref, top_comment,
// generated_feedback and empty s_ct, s_ci, s_ft, s_fi, s_cf columns.
std::string worksheet_csv(std::span<const data::Sample> samples, std::span<const std::string> generated,
                          std::size_t excerpt_words = 40);

// RFC 4180 quoting when the field needs it.
std::string csv_field(std::string_view value);

}  // namespace mmfeed::eval
