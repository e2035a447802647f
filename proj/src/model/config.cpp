// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/model/config.hpp"

#include <cmath>

#include "mmfeed/error.hpp"

namespace mmfeed::model {

using nlohmann::ordered_json;

Ablation parse_ablation(std::string_view name) {
  if (name == "T") return Ablation::T;
  if (name == "TV") return Ablation::TV;
  if (name == "TVA") return Ablation::TVA;
  if (name == "TVAR") return Ablation::TVAR;
  throw ConfigError("", "unknown ablation \"" + std::string(name) + "\" (expected T, TV, TVA or TVAR)");
}

const char* to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::T: return "T";
    case Ablation::TV: return "TV";
    case Ablation::TVA: return "TVA";
    case Ablation::TVAR: return "TVAR";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* field) {
    if (v < 1) throw ConfigError(std::string("model.") + field, "must be at least 1");
  };
  positive(d_model, "d_model");
  positive(n_heads, "n_heads");
  positive(n_layers_enc, "n_layers_enc");
  positive(n_layers_dec, "n_layers_dec");
  positive(d_ffn_hidden, "d_ffn_hidden");
  positive(d_visual, "d_visual");
  positive(max_text_len, "max_text_len");
  positive(max_gen_len, "max_gen_len");
  if (vocab_size < 5) throw ConfigError("model.vocab_size", "must be at least 5 (4 reserved ids plus one token)");
  if (d_model % n_heads != 0) {
    throw ConfigError("model.n_heads", "d_model " + std::to_string(d_model) + " is not divisible by " +
                                           std::to_string(n_heads) + " heads");
  }
  if (!(dropout >= 0.0f && dropout < 1.0f)) throw ConfigError("model.dropout", "must lie in [0, 1)");
}

ordered_json to_json(const ModelConfig& c) {
  ordered_json j;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["n_layers_enc"] = c.n_layers_enc;
  j["n_layers_dec"] = c.n_layers_dec;
  j["d_ffn_hidden"] = c.d_ffn_hidden;
  j["d_visual"] = c.d_visual;
  j["dropout"] = c.dropout;
  j["vocab_size"] = c.vocab_size;
  j["max_text_len"] = c.max_text_len;
  j["max_gen_len"] = c.max_gen_len;
  j["ablation"] = to_string(c.ablation);
  return j;
}

namespace {

std::size_t get_size(const ordered_json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(path, "must be a non-negative integer");
  return v.get<std::size_t>();
}

}  // namespace

ModelConfig model_config_from_json(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  ModelConfig c;
  for (const auto& [key, v] : j.items()) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (key == "d_model") c.d_model = get_size(v, field);
    else if (key == "n_heads") c.n_heads = get_size(v, field);
    else if (key == "n_layers_enc") c.n_layers_enc = get_size(v, field);
    else if (key == "n_layers_dec") c.n_layers_dec = get_size(v, field);
    else if (key == "d_ffn_hidden") c.d_ffn_hidden = get_size(v, field);
    else if (key == "d_visual") c.d_visual = get_size(v, field);
    else if (key == "vocab_size") c.vocab_size = get_size(v, field);
    else if (key == "max_text_len") c.max_text_len = get_size(v, field);
    else if (key == "max_gen_len") c.max_gen_len = get_size(v, field);
    else if (key == "dropout") {
      if (!v.is_number()) throw ConfigError(field, "must be a number");
      c.dropout = v.get<float>();
    } else if (key == "ablation") {
      if (!v.is_string()) throw ConfigError(field, "must be a string");
      try {
        c.ablation = parse_ablation(v.get<std::string>());
      } catch (const ConfigError& e) {
        throw ConfigError(field, e.what());
      }
    } else {
      throw ConfigError(field, "unknown key");
    }
  }
  return c;
}

}  // namespace mmfeed::model
