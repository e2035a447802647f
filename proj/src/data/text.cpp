// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/data/text.hpp"

#include <cctype>
#include <cstdint>
#include <sstream>

namespace mmfeed::data {

// Generated from data/contractions.tsv at build time.
extern const char* const kContractionTable;

namespace {

// Decodes one UTF-8 sequence starting at s[i]; advances i. Invalid bytes
// come back as themselves.
char32_t next_codepoint(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0u) == 0x80u ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    i += 1;
    return b0;
  }
  if ((b0 & 0xE0u) == 0xC0u) {
    int c1 = cont(1);
    if (c1 >= 0) {
      i += 2;
      return (char32_t(b0 & 0x1Fu) << 6) | char32_t(c1);
    }
  } else if ((b0 & 0xF0u) == 0xE0u) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      i += 3;
      return (char32_t(b0 & 0x0Fu) << 12) | (char32_t(c1) << 6) | char32_t(c2);
    }
  } else if ((b0 & 0xF8u) == 0xF0u) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      i += 4;
      return (char32_t(b0 & 0x07u) << 18) | (char32_t(c1) << 12) | (char32_t(c2) << 6) | char32_t(c3);
    }
  }
  i += 1;
  return b0;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' || cp == 0x85 ||
         cp == 0xA0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_punct(char32_t cp) {
  if (cp < 0x80) return std::ispunct(static_cast<int>(cp)) != 0;
  return cp == 0xA1 || cp == 0xAB || cp == 0xBB || cp == 0xBF || cp == 0xB7 || (cp >= 0x2010 && cp <= 0x2027) ||
         (cp >= 0x2030 && cp <= 0x205E) || (cp >= 0x3001 && cp <= 0x3003) || (cp >= 0xFF01 && cp <= 0xFF0F);
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'';
}

struct Entity {
  std::string_view name;
  char32_t cp;
};

constexpr Entity kEntities[] = {{"amp", '&'},   {"lt", '<'},    {"gt", '>'},      {"quot", '"'},
                                {"apos", '\''}, {"nbsp", 0xA0}, {"rsquo", 0x2019}, {"lsquo", 0x2018},
                                {"rdquo", 0x201D}, {"ldquo", 0x201C}, {"hellip", 0x2026}, {"mdash", 0x2014},
                                {"ndash", 0x2013}};

// Decodes "&name;" / "&#N;" / "&#xN;" at s[i]; returns false if not an entity.
bool decode_entity(std::string_view s, std::size_t& i, std::string& out) {
  const std::size_t semi = s.find(';', i);
  if (semi == std::string_view::npos || semi - i > 10) return false;
  std::string_view body = s.substr(i + 1, semi - i - 1);
  if (body.size() >= 2 && body[0] == '#') {
    std::uint32_t cp = 0;
    const bool hex = body[1] == 'x' || body[1] == 'X';
    std::string_view digits = body.substr(hex ? 2 : 1);
    if (digits.empty()) return false;
    for (char c : digits) {
      const int v = hex ? (std::isxdigit(static_cast<unsigned char>(c)) ? std::stoi(std::string(1, c), nullptr, 16) : -1)
                        : (std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : -1);
      if (v < 0) return false;
      cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
      if (cp > 0x10FFFF) return false;
    }
    append_utf8(out, cp);
    i = semi + 1;
    return true;
  }
  for (const Entity& e : kEntities) {
    if (body == e.name) {
      append_utf8(out, e.cp);
      i = semi + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

std::string strip_html(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    const char c = raw[i];
    if (c == '<' && i + 1 < raw.size() &&
        (std::isalpha(static_cast<unsigned char>(raw[i + 1])) || raw[i + 1] == '/' || raw[i + 1] == '!')) {
      const std::size_t close = raw.find('>', i + 1);
      if (close != std::string_view::npos) {
        out += ' ';
        i = close + 1;
        continue;
      }
    }
    if (c == '&' && decode_entity(raw, i, out)) continue;
    out += c;
    ++i;
  }
  return out;
}

const std::map<std::string, std::string, std::less<>>& contraction_table() {
  static const auto table = [] {
    std::map<std::string, std::string, std::less<>> t;
    std::istringstream in(kContractionTable);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const std::size_t tab = line.find('\t');
      if (tab == std::string::npos) continue;
      t.emplace(line.substr(0, tab), line.substr(tab + 1));
    }
    return t;
  }();
  return table;
}

std::string expand_contractions(std::string_view lowered) {
  const auto& table = contraction_table();
  std::string out;
  out.reserve(lowered.size());
  std::size_t i = 0;
  while (i < lowered.size()) {
    if (!is_word_char(lowered[i])) {
      out += lowered[i++];
      continue;
    }
    std::size_t j = i;
    while (j < lowered.size() && is_word_char(lowered[j])) ++j;
    std::string_view word = lowered.substr(i, j - i);
    auto it = table.find(word);
    if (it != table.end()) {
      out += it->second;
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

std::string normalize_text(std::string_view raw) {
  const std::string stripped = strip_html(raw);
  std::string lowered;
  lowered.reserve(stripped.size());
  std::size_t i = 0;
  bool pending_space = false;
  while (i < stripped.size()) {
    const char32_t cp = next_codepoint(stripped, i);
    if (is_space(cp)) {
      pending_space = !lowered.empty();
      continue;
    }
    if (pending_space) {
      lowered += ' ';
      pending_space = false;
    }
    if (cp == 0x2019 || cp == 0x2018 || cp == 0x02BC) {
      lowered += '\'';
    } else if (cp < 0x80) {
      lowered += static_cast<char>(std::tolower(static_cast<int>(cp)));
    } else {
      append_utf8(lowered, cp);
    }
  }
  return expand_contractions(lowered);
}

std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < normalized.size()) {
    const std::size_t start = i;
    const char32_t cp = next_codepoint(normalized, i);
    if (is_space(cp) || is_punct(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      if (!is_space(cp)) tokens.emplace_back(normalized.substr(start, i - start));
      continue;
    }
    current.append(normalized.substr(start, i - start));
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> normalize_and_tokenize(std::string_view raw) { return tokenize(normalize_text(raw)); }

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = next_codepoint(text, i);
    const bool space = is_space(cp);
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace mmfeed::data
