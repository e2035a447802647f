// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/data/vocab.hpp"

#include <algorithm>
#include <map>

#include "mmfeed/data/text.hpp"
#include "mmfeed/error.hpp"

namespace mmfeed::data {

namespace {
const char* const kReservedNames[kReservedTokens] = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocabulary::Vocabulary() : Vocabulary({}, 1) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, int min_frequency) : min_frequency_(min_frequency) {
  tokens_.reserve(tokens.size() + kReservedTokens);
  for (const char* name : kReservedNames) tokens_.emplace_back(name);
  for (auto& t : tokens) {
    if (t.empty()) throw Error("vocabulary: empty token");
    const auto id = static_cast<TokenId>(tokens_.size());
    if (!ids_.emplace(t, id).second) throw Error("vocabulary: duplicate token \"" + t + "\"");
    tokens_.push_back(std::move(t));
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

std::vector<std::string> Vocabulary::entries() const {
  return {tokens_.begin() + kReservedTokens, tokens_.end()};
}

Vocabulary build_vocab(std::span<const Sample> samples, int min_frequency) {
  std::map<std::string, std::size_t> counts;
  auto count = [&](const std::string& s) {
    for (auto& t : normalize_and_tokenize(s)) ++counts[std::move(t)];
  };
  for (const Sample& s : samples) {
    count(s.title);
    count(s.text);
    for (const Comment& c : s.comments) count(c.text);
  }
  if (counts.empty()) throw Error("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= static_cast<std::size_t>(std::max(min_frequency, 1))) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens), min_frequency);
}

TokenIds encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  TokenIds ids;
  for (const auto& t : normalize_and_tokenize(text)) {
    if (ids.size() >= max_len) break;
    ids.push_back(vocab.id(t));
  }
  return ids;
}

TokenIds encode_comment(std::string_view text, const Vocabulary& vocab, std::size_t max_content) {
  TokenIds ids{kBos};
  const TokenIds content = encode(text, vocab, max_content);
  ids.insert(ids.end(), content.begin(), content.end());
  ids.push_back(kEos);
  return ids;
}

TokenIds encode_article(const Sample& sample, const Vocabulary& vocab, std::size_t max_len) {
  TokenIds ids = encode(sample.title, vocab, max_len);
  if (ids.size() < max_len) {
    const TokenIds body = encode(sample.text, vocab, max_len - ids.size());
    ids.insert(ids.end(), body.begin(), body.end());
  }
  if (ids.empty() && max_len > 0) ids.push_back(kUnk);
  return ids;
}

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (TokenId id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace mmfeed::data
