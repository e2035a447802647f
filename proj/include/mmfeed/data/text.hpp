// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mmfeed::data {

// Strips HTML tags and common entities, lowercases, expands contractions
// from the built-in table, and collapses whitespace.
std::string normalize_text(std::string_view raw);

std::string strip_html(std::string_view raw);
std::string expand_contractions(std::string_view lowered);

// The built-in contraction table (lowercase contraction -> expansion).
const std::map<std::string, std::string, std::less<>>& contraction_table();

// Splits already-normalized text on Unicode whitespace and punctuation;
// punctuation characters become tokens of their own.
std::vector<std::string> tokenize(std::string_view normalized);

// normalize_text followed by tokenize.
std::vector<std::string> normalize_and_tokenize(std::string_view raw);

std::size_t count_words(std::string_view text);

}  // namespace mmfeed::data
