// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mmfeed/tensor/tensor.hpp"

namespace mmfeed {

inline constexpr int kCheckpointFormatVersion = 1;

// On-disk layout:
//   {"format_version":1, "config":{...},
//    "params":{name:{"shape":[...], "data_b64": <little-endian f32 bytes>}}}
// Serialization is deterministic, so save -> load -> save reproduces the
// same bytes.
struct CheckpointDocument {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::map<std::string, Tensor> params;
};

std::string checkpoint_to_string(const CheckpointDocument& doc);
// Throws ParseError on malformed JSON, bad base64, or a version mismatch.
CheckpointDocument checkpoint_from_string(std::string_view text);

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointDocument& doc);
CheckpointDocument read_checkpoint_file(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

std::string encode_f32_le(std::span<const float> values);
std::vector<float> decode_f32_le(std::string_view bytes);

}  // namespace mmfeed
