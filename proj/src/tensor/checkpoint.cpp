// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/tensor/checkpoint.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mmfeed {

using nlohmann::ordered_json;

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ParseError("base64 length is not a multiple of 4");
  if (text.empty()) return {};
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw ParseError("invalid base64 data");
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string encode_f32_le(std::span<const float> values) {
  static_assert(sizeof(float) == 4);
  std::string out(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  return out;
}

std::vector<float> decode_f32_le(std::string_view bytes) {
  if (bytes.size() % 4 != 0) throw ParseError("f32 payload length is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

std::string checkpoint_to_string(const CheckpointDocument& doc) {
  ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = doc.config;
  ordered_json params = ordered_json::object();
  for (const auto& [name, t] : doc.params) {
    ordered_json entry;
    entry["shape"] = t.shape();
    entry["data_b64"] = base64_encode(encode_f32_le(t.data()));
    params[name] = std::move(entry);
  }
  j["params"] = std::move(params);
  return j.dump(1) + "\n";
}

CheckpointDocument checkpoint_from_string(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw ParseError("checkpoint lacks an integer format_version");
  }
  const int version = j["format_version"].get<int>();
  if (version != kCheckpointFormatVersion) {
    throw ParseError("unsupported checkpoint format_version " + std::to_string(version) + " (expected " +
                     std::to_string(kCheckpointFormatVersion) + ")");
  }
  if (!j.contains("config") || !j["config"].is_object()) throw ParseError("checkpoint lacks a config object");
  if (!j.contains("params") || !j["params"].is_object()) throw ParseError("checkpoint lacks a params object");
  CheckpointDocument doc;
  doc.config = j["config"];
  for (const auto& [name, entry] : j["params"].items()) {
    if (!entry.is_object() || !entry.contains("shape") || !entry.contains("data_b64") || !entry["shape"].is_array() ||
        !entry["data_b64"].is_string()) {
      throw ParseError("parameter " + name + " needs \"shape\" and \"data_b64\"");
    }
    Shape shape;
    for (const auto& d : entry["shape"]) {
      if (!d.is_number_unsigned()) throw ParseError("parameter " + name + " has a non-integer extent");
      shape.push_back(d.get<std::size_t>());
    }
    std::vector<float> data = decode_f32_le(base64_decode(entry["data_b64"].get<std::string>()));
    try {
      doc.params.emplace(name, Tensor(std::move(shape), std::move(data)));
    } catch (const DimensionError& e) {
      throw ParseError("parameter " + name + ": " + e.what());
    }
  }
  return doc;
}

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointDocument& doc) {
  const std::string text = checkpoint_to_string(doc);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointDocument read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace mmfeed
