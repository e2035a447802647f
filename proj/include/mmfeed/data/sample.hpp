// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmfeed::data {

struct Comment {
  std::string text;
  std::int64_t likes = 0;

  friend bool operator==(const Comment&, const Comment&) = default;
};

// One news article: headline, body, key into the region-feature file, and
// the user comments with their like counts.
struct Sample {
  std::string id;
  std::string title;
  std::string text;
  std::string image_ref;
  std::vector<Comment> comments;

  friend bool operator==(const Sample&, const Sample&) = default;
};

}  // namespace mmfeed::data
