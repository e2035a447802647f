// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmfeed/data/sample.hpp"

namespace mmfeed::eval {

using Embedding = std::vector<float>;

// Cosine of the angle between a and b; with raw_dot the plain dot product.
// Throws on a length mismatch or (cosine only) a zero vector.
double cosine_similarity(std::span<const float> a, std::span<const float> b, bool raw_dot = false);

// Teacher-student embeddings of one (comment, feedback) pair.
struct DistillationTriple {
  Embedding teacher_comment;  // M(c)
  Embedding student_comment;  // M̂(c)
  Embedding student_feedback; // M̂(f)
};

// (1/n) Σ ( |M̂(c) - M(c)|² + |M̂(f) - M(c)|² ).
double distillation_loss(std::span<const DistillationTriple> triples);

// Deterministic text -> vector map with a fixed dimension.
struct EmbeddingProvider {
  std::string provenance;  // "model-encoder" or "external-file"
  std::size_t dim = 0;
  std::function<Embedding(std::string_view)> embed;
};

// Vectors looked up by the SHA-256 (lowercase hex) of the exact UTF-8 text.
// File: one JSON object per line, {"text_sha256": ..., "vector": [...]}.
// A text without a vector is an error.
EmbeddingProvider external_file_provider(const std::filesystem::path& path);
std::string sha256_hex(std::string_view text);

// Comments ordered by likes, most liked first; ties keep input order.
// Returns indices into `comments`.
std::vector<std::size_t> like_order(std::span<const data::Comment> comments);

struct RankResult {
  std::size_t rank = 0;           // 1-based like-rank of the most similar comment
  double score = 0;               // its similarity to the feedback
  std::size_t comment_index = 0;  // position in the input list
};

// Most similar comment by provider embeddings; on equal similarity the
// better like-rank wins.
RankResult rank_feedback(std::string_view feedback, std::span<const data::Comment> comments,
                         const EmbeddingProvider& provider, bool raw_dot = false);

// (1/Q) Σ 1/rank. Throws on an empty list or a rank of 0.
double mrr(std::span<const std::size_t> ranks);
// 100 × fraction of ranks <= k. Throws when k is 0; 0 for an empty list.
double recall_at_k(std::span<const std::size_t> ranks, std::size_t k);

}  // namespace mmfeed::eval
