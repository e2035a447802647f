// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/eval/suite.hpp"

#include <cstdio>
#include <mutex>
#include <unordered_map>

#include "mmfeed/data/text.hpp"
#include "mmfeed/data/vocab.hpp"
#include "mmfeed/error.hpp"
#include "mmfeed/eval/metrics.hpp"
#include "mmfeed/model/model.hpp"

namespace mmfeed::eval {

EmbeddingProvider encoder_provider(const train::Checkpoint& ckpt) {
  struct State {
    train::Checkpoint ckpt;
    std::mutex mu;
    std::unordered_map<std::string, Embedding> cache;
  };
  auto state = std::make_shared<State>();
  state->ckpt = ckpt;
  EmbeddingProvider p;
  p.provenance = "model-encoder";
  p.dim = ckpt.model.d_model;
  p.embed = [state](std::string_view text) {
    std::lock_guard lock(state->mu);
    auto it = state->cache.find(std::string(text));
    if (it != state->cache.end()) return it->second;
    TokenIds ids = data::encode(text, state->ckpt.vocab, state->ckpt.model.max_text_len);
    if (ids.empty()) ids.push_back(kUnkId);
    Embedding e = model::mean_pooled_encoding(state->ckpt.params, state->ckpt.model, ids);
    state->cache.emplace(std::string(text), e);
    return e;
  };
  return p;
}

Generator model_generator(const train::Checkpoint& ckpt, const region::RegionMap* regions) {
  auto shared = std::make_shared<train::Checkpoint>(ckpt);
  return [shared, regions](const data::Sample& s) {
    const region::RegionFeatureSet* rfs = nullptr;
    if (regions != nullptr) {
      auto it = regions->find(s.image_ref);
      if (it != regions->end()) rfs = &it->second;
    }
    const TokenIds article = data::encode_article(s, shared->vocab, shared->model.max_text_len);
    const TokenIds out = model::generate_greedy(shared->params, shared->model, article, rfs);
    const auto tokens = data::decode(out, shared->vocab);
    return data::join_tokens(tokens);
  };
}

std::vector<std::pair<std::string, double>> EvalReport::metrics() const {
  std::vector<std::pair<std::string, double>> out = {
      {"bleu4", bleu4}, {"cider", cider}, {"rouge_l", rouge_l}, {"meteor", meteor}, {"mrr", mrr}};
  for (const auto& [k, v] : recall_at) out.emplace_back("recall@" + std::to_string(k), v);
  return out;
}

SuiteResult evaluate_suite(std::span<const data::Sample> test, const Generator& generate,
                           const EmbeddingProvider& provider, std::span<const std::size_t> ks) {
  SuiteResult result;
  std::vector<Tokens> candidates;
  std::vector<References> references;
  std::vector<std::size_t> ranks;
  double rouge_sum = 0, meteor_sum = 0;

  for (const data::Sample& s : test) {
    if (s.comments.empty()) continue;
    ArticleResult art;
    art.id = s.id;
    art.generated = generate(s);
    art.rank = rank_feedback(art.generated, s.comments, provider);

    Tokens cand = data::normalize_and_tokenize(art.generated);
    References refs;
    for (const data::Comment& c : s.comments) refs.push_back(data::normalize_and_tokenize(c.text));
    rouge_sum += rouge_l(cand, refs);
    meteor_sum += meteor(cand, refs);
    candidates.push_back(std::move(cand));
    references.push_back(std::move(refs));
    ranks.push_back(art.rank.rank);
    result.articles.push_back(std::move(art));
  }
  if (result.articles.empty()) throw Error("evaluate: the test split has no article with comments");

  EvalReport& r = result.report;
  r.n_articles = result.articles.size();
  r.provider = provider.provenance;
  r.bleu4 = corpus_bleu4(candidates, references);
  r.cider = cider(candidates, references);
  r.rouge_l = rouge_sum / double(r.n_articles);
  r.meteor = meteor_sum / double(r.n_articles);
  r.mrr = mrr(ranks);
  for (std::size_t k : ks) r.recall_at[k] = recall_at_k(ranks, k);
  return result;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string report_csv(const EvalReport& report) {
  std::string header = "provider,n_articles", row = csv_field(report.provider) + "," + std::to_string(report.n_articles);
  for (const auto& [key, value] : report.metrics()) {
    header += "," + key;
    row += "," + fixed(value, 6);
  }
  return header + "\n" + row + "\n";
}

std::string report_table(const EvalReport& report) {
  std::vector<std::pair<std::string, std::string>> cols = {
      {"BLEU-4", fixed(report.bleu4, 4)}, {"CIDEr", fixed(report.cider, 4)}, {"ROUGE-L", fixed(report.rouge_l, 4)},
      {"METEOR", fixed(report.meteor, 4)}, {"MRR", fixed(report.mrr, 4)}};
  for (const auto& [k, v] : report.recall_at) cols.emplace_back("R@" + std::to_string(k), fixed(v, 2) + "%");
  std::string head, body;
  for (const auto& [name, value] : cols) {
    const std::size_t w = std::max(name.size(), value.size()) + 2;
    head += pad(name, w);
    body += pad(value, w);
  }
  return head + "\n" + body + "\n" + "provider: " + report.provider + ", articles: " +
         std::to_string(report.n_articles) + "\n";
}

std::string worksheet_csv(std::span<const data::Sample> samples, std::span<const std::string> generated,
                          std::size_t excerpt_words) {
  if (samples.size() != generated.size()) throw DimensionError("worksheet: one generated feedback per sample needed");
  std::string out = "id,text_excerpt,image_ref,top_comment,generated_feedback,s_ct,s_ci,s_ft,s_fi,s_cf\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const data::Sample& s = samples[i];
    std::string excerpt;
    std::size_t words = 0;
    std::size_t pos = 0;
    while (words < excerpt_words) {
      const std::size_t b = s.text.find_first_not_of(" \t\r\n", pos);
      if (b == std::string::npos) break;
      const std::size_t e = std::min(s.text.find_first_of(" \t\r\n", b), s.text.size());
      if (!excerpt.empty()) excerpt += ' ';
      excerpt += s.text.substr(b, e - b);
      ++words;
      pos = e;
    }
    std::string top;
    if (!s.comments.empty()) top = s.comments[like_order(s.comments).front()].text;
    out += csv_field(s.id) + "," + csv_field(excerpt) + "," + csv_field(s.image_ref) + "," + csv_field(top) + "," +
           csv_field(generated[i]) + ",,,,,\n";
  }
  return out;
}

}  // namespace mmfeed::eval
