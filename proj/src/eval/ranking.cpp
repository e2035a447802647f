// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/eval/ranking.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "mmfeed/error.hpp"

namespace mmfeed::eval {

double cosine_similarity(std::span<const float> a, std::span<const float> b, bool raw_dot) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine_similarity: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double dotp = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dotp += double(a[i]) * double(b[i]);
    na += double(a[i]) * double(a[i]);
    nb += double(b[i]) * double(b[i]);
  }
  if (raw_dot) return dotp;
  if (na == 0 || nb == 0) throw Error("cosine_similarity: zero vector");
  return dotp / (std::sqrt(na) * std::sqrt(nb));
}

double distillation_loss(std::span<const DistillationTriple> triples) {
  if (triples.empty()) throw Error("distillation_loss: no pairs");
  const std::size_t d = triples[0].teacher_comment.size();
  double total = 0;
  for (const auto& t : triples) {
    if (t.teacher_comment.size() != d || t.student_comment.size() != d || t.student_feedback.size() != d) {
      throw DimensionError("distillation_loss: embedding lengths differ");
    }
    for (std::size_t i = 0; i < d; ++i) {
      const double a = double(t.student_comment[i]) - double(t.teacher_comment[i]);
      const double b = double(t.student_feedback[i]) - double(t.teacher_comment[i]);
      total += a * a + b * b;
    }
  }
  return total / double(triples.size());
}

std::string sha256_hex(std::string_view text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

EmbeddingProvider external_file_provider(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  auto table = std::make_shared<std::unordered_map<std::string, Embedding>>();
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("text_sha256") || !j.contains("vector") || j.size() != 2) {
      throw ParseError("expected exactly \"text_sha256\" and \"vector\"", line_no);
    }
    if (!j["text_sha256"].is_string() || !j["vector"].is_array()) throw ParseError("wrong field types", line_no);
    Embedding v;
    for (const auto& x : j["vector"]) {
      if (!x.is_number()) throw ParseError("vector must hold numbers", line_no);
      v.push_back(x.get<float>());
    }
    if (v.empty()) throw ParseError("empty vector", line_no);
    if (dim == 0) dim = v.size();
    if (v.size() != dim) throw ParseError("vector length differs from earlier lines", line_no);
    table->insert_or_assign(j["text_sha256"].get<std::string>(), std::move(v));
  }
  if (table->empty()) throw Error("embedding file " + path.string() + " holds no vectors");
  EmbeddingProvider p;
  p.provenance = "external-file";
  p.dim = dim;
  p.embed = [table](std::string_view text) {
    const std::string key = sha256_hex(text);
    auto it = table->find(key);
    if (it == table->end()) throw Error("no external embedding for text with sha256 " + key);
    return it->second;
  };
  return p;
}

std::vector<std::size_t> like_order(std::span<const data::Comment> comments) {
  std::vector<std::size_t> order(comments.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return comments[a].likes > comments[b].likes; });
  return order;
}

RankResult rank_feedback(std::string_view feedback, std::span<const data::Comment> comments,
                         const EmbeddingProvider& provider, bool raw_dot) {
  if (comments.empty()) throw Error("rank_feedback: no comments");
  const Embedding f = provider.embed(feedback);
  const auto order = like_order(comments);
  RankResult best;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Embedding c = provider.embed(comments[order[r]].text);
    const double s = cosine_similarity(f, c, raw_dot);
    if (r == 0 || s > best.score) best = {r + 1, s, order[r]};
  }
  return best;
}

double mrr(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw Error("mrr: no ranks");
  // Summed in sorted order so the result depends only on the multiset.
  std::vector<std::size_t> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0;
  for (std::size_t r : sorted) {
    if (r == 0) throw Error("mrr: ranks start at 1");
    total += 1.0 / double(r);
  }
  return total / double(ranks.size());
}

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (k == 0) throw Error("recall_at_k: k must be at least 1");
  if (ranks.empty()) return 0.0;
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r >= 1 && r <= k; });
  return 100.0 * double(hits) / double(ranks.size());
}

}  // namespace mmfeed::eval
