// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/data/records.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mmfeed/data/text.hpp"
#include "mmfeed/error.hpp"

namespace mmfeed::data {

using nlohmann::ordered_json;

namespace {

const std::string& require_string(const ordered_json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing \"") + key + "\"", line);
  if (!it->is_string()) throw ParseError(std::string("\"") + key + "\" must be a string", line);
  return it->get_ref<const std::string&>();
}

void reject_unknown(const ordered_json& obj, std::initializer_list<const char*> allowed, std::size_t line,
                    const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ParseError(std::string("unknown key \"") + key + "\" in " + where, line);
  }
}

Sample sample_from_json(const ordered_json& obj, std::size_t line) {
  if (!obj.is_object()) throw ParseError("record must be a JSON object", line);
  reject_unknown(obj, {"id", "title", "text", "image_ref", "comments"}, line, "record");
  Sample s;
  s.id = require_string(obj, "id", line);
  s.title = require_string(obj, "title", line);
  s.text = require_string(obj, "text", line);
  s.image_ref = require_string(obj, "image_ref", line);
  auto it = obj.find("comments");
  if (it == obj.end()) throw ParseError("missing \"comments\"", line);
  if (!it->is_array()) throw ParseError("\"comments\" must be an array", line);
  for (const auto& c : *it) {
    if (!c.is_object()) throw ParseError("comment must be an object", line);
    reject_unknown(c, {"text", "likes"}, line, "comment");
    Comment comment;
    comment.text = require_string(c, "text", line);
    auto likes = c.find("likes");
    if (likes == c.end()) throw ParseError("comment missing \"likes\"", line);
    if (!likes->is_number_integer()) throw ParseError("\"likes\" must be an integer", line);
    comment.likes = likes->get<std::int64_t>();
    if (comment.likes < 0) throw ParseError("\"likes\" must be non-negative", line);
    s.comments.push_back(std::move(comment));
  }
  if (s.id.empty()) throw ParseError("empty \"id\"", line);
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

// RFC 4180 records: quoted fields may hold the separator, quotes ("") and
// newlines. Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      break;
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field");
  fields.push_back(std::move(field));
  return any;
}

std::vector<std::string> split_on(const std::string& s, char delimiter) {
  std::vector<std::string> parts;
  if (s.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(delimiter, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<Sample> parse_records(std::istream& in) {
  std::vector<Sample> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    Sample s = sample_from_json(obj, line_no);
    if (!seen.insert(s.id).second) throw ParseError("duplicate id \"" + s.id + "\"", line_no);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> parse_records_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_records(in);
}

std::string record_to_line(const Sample& s) {
  ordered_json obj;
  obj["id"] = s.id;
  obj["title"] = s.title;
  obj["text"] = s.text;
  obj["image_ref"] = s.image_ref;
  obj["comments"] = ordered_json::array();
  for (const Comment& c : s.comments) {
    ordered_json jc;
    jc["text"] = c.text;
    jc["likes"] = c.likes;
    obj["comments"].push_back(std::move(jc));
  }
  return obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void write_records(std::ostream& out, std::span<const Sample> samples) {
  for (const Sample& s : samples) out << record_to_line(s) << '\n';
}

void write_records_file(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_records(out, samples);
  if (!out) throw Error("write failed: " + path.string());
}

LegacyParseResult parse_legacy_csv(std::istream& in, char delimiter) {
  LegacyParseResult result;
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields)) throw ParseError("empty CSV", 1);

  const char* names[] = {"Title", "Text", "Image", "Comment", "Likes"};
  std::size_t col[5];
  for (int k = 0; k < 5; ++k) {
    col[k] = fields.size();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (trim(fields[i]) == names[k]) col[k] = i;
    }
    if (col[k] == fields.size()) throw ParseError(std::string("missing column ") + names[k], 1);
  }

  std::size_t row = 0;
  while (read_csv_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;
    auto field = [&](int k) -> const std::string& {
      static const std::string empty;
      return col[k] < fields.size() ? fields[col[k]] : empty;
    };
    const auto comments = split_on(field(3), delimiter);
    const auto likes = split_on(field(4), delimiter);
    if (comments.size() != likes.size()) {
      result.errors.push_back({row, std::to_string(comments.size()) + " comments but " +
                                        std::to_string(likes.size()) + " like counts"});
      continue;
    }
    Sample s;
    char id[32];
    std::snprintf(id, sizeof id, "legacy-%06zu", row);
    s.id = id;
    s.title = field(0);
    s.text = field(1);
    s.image_ref = trim(field(2));
    bool ok = true;
    for (std::size_t i = 0; i < comments.size() && ok; ++i) {
      const std::string digits = trim(likes[i]);
      std::int64_t value = -1;
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size() || value < 0) {
        result.errors.push_back({row, "malformed like count \"" + digits + "\""});
        ok = false;
        break;
      }
      s.comments.push_back({comments[i], value});
    }
    if (ok) result.samples.push_back(std::move(s));
  }
  return result;
}

LegacyParseResult parse_legacy_csv_file(const std::filesystem::path& path, char delimiter) {
  auto in = open_input(path);
  return parse_legacy_csv(in, delimiter);
}

Sample normalize_sample(Sample sample) {
  sample.title = normalize_text(sample.title);
  sample.text = normalize_text(sample.text);
  for (Comment& c : sample.comments) c.text = normalize_text(c.text);
  return sample;
}

}  // namespace mmfeed::data
