// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmfeed/data/sample.hpp"
#include "mmfeed/types.hpp"

namespace mmfeed::data {

inline constexpr TokenId kPad = kPadId;
inline constexpr TokenId kBos = kBosId;
inline constexpr TokenId kEos = kEosId;
inline constexpr TokenId kUnk = kUnkId;
inline constexpr std::size_t kReservedTokens = 4;

class Vocabulary {
 public:
  Vocabulary();
  // `tokens` lists the non-reserved entries in id order, starting at id 4.
  Vocabulary(std::vector<std::string> tokens, int min_frequency);

  TokenId id(std::string_view token) const;  // kUnk when absent
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  int min_frequency() const noexcept { return min_frequency_; }
  // Non-reserved tokens in id order.
  std::vector<std::string> entries() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.min_frequency_ == b.min_frequency_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  int min_frequency_ = 1;
};

// Counts tokens of titles, texts and comments. Tokens seen at least
// `min_frequency` times get ids by descending count, ties broken
// lexicographically. Throws on a corpus without tokens.
Vocabulary build_vocab(std::span<const Sample> samples, int min_frequency);

// normalize, tokenize, map to ids and keep the first `max_len`.
TokenIds encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len);
// BOS, at most `max_content` content ids, EOS.
TokenIds encode_comment(std::string_view text, const Vocabulary& vocab, std::size_t max_content);
// Title followed by body, truncated to `max_len`. An article without any
// token encodes as a single UNK so the encoder always has input.
TokenIds encode_article(const Sample& sample, const Vocabulary& vocab, std::size_t max_len);

// Ids back to tokens. PAD and BOS are dropped, decoding stops at EOS.
std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab);
std::string join_tokens(std::span<const std::string> tokens);

}  // namespace mmfeed::data
