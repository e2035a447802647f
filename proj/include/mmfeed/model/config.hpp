// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

namespace mmfeed::model {

// Which inputs reach the decoder:
//   T     text only
//   TV    + fusion of z* with the image-level vector
//   TVA   + attention pooling over projected region features
//   TVAR  + box geometry added to each region feature
// Every level keeps the parameters of the level below.
enum class Ablation { T, TV, TVA, TVAR };

Ablation parse_ablation(std::string_view name);  // throws ConfigError
const char* to_string(Ablation ablation);
inline bool uses_visual(Ablation a) { return a != Ablation::T; }

struct ModelConfig {
  std::size_t d_model = 128;
  std::size_t n_heads = 8;
  std::size_t n_layers_enc = 6;
  std::size_t n_layers_dec = 6;
  std::size_t d_ffn_hidden = 512;
  std::size_t d_visual = 2048;
  float dropout = 0.5f;
  std::size_t vocab_size = 0;
  std::size_t max_text_len = 512;
  std::size_t max_gen_len = 30;
  Ablation ablation = Ablation::TVAR;

  std::size_t d_head() const { return d_model / n_heads; }
  // Throws ConfigError naming the field ("model.n_heads", ...).
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::ordered_json to_json(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys are rejected. `path` is the
// prefix used in error messages.
ModelConfig model_config_from_json(const nlohmann::ordered_json& j, const std::string& path = "model");

}  // namespace mmfeed::model
