// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mmfeed/data/sample.hpp"

namespace mmfeed::data {

// Canonical corpus: one JSON object per line,
//   {"id", "title", "text", "image_ref", "comments": [{"text", "likes"}]}
// Blank lines are ignored. Unknown or missing keys, wrong types, negative
// likes and duplicate ids raise ParseError carrying the line number.
std::vector<Sample> parse_records(std::istream& in);
std::vector<Sample> parse_records_file(const std::filesystem::path& path);

std::string record_to_line(const Sample& sample);
void write_records(std::ostream& out, std::span<const Sample> samples);
void write_records_file(const std::filesystem::path& path, std::span<const Sample> samples);

struct RowError {
  std::size_t row = 0;  // 1-based data row, header excluded
  std::string reason;
};

struct LegacyParseResult {
  std::vector<Sample> samples;
  std::vector<RowError> errors;
};

// Crawler CSV with a header naming Title, Text, Image, Comment and Likes
// (any order, extra columns ignored). Comment and Likes hold `delimiter`
// joined lists that must have the same length; rows that do not, or whose
// likes are not non-negative integers, are skipped and reported. Sample ids
// are "legacy-NNNNNN" from the data row number. A missing column is a
// ParseError.
LegacyParseResult parse_legacy_csv(std::istream& in, char delimiter = ':');
LegacyParseResult parse_legacy_csv_file(const std::filesystem::path& path, char delimiter = ':');

// normalize_text applied to title, text and every comment.
Sample normalize_sample(Sample sample);

}  // namespace mmfeed::data
