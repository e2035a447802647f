// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/cli/run_config.hpp"

#include <fstream>

#include "mmfeed/error.hpp"

namespace mmfeed::cli {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path path_field(const ordered_json& v, const char* key, const fs::path& base) {
  if (!v.is_string() || v.get<std::string>().empty()) throw ConfigError(key, "must be a non-empty string");
  fs::path p = v.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

std::uint64_t count_field(const ordered_json& v, const char* key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(key, "must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

RunConfig parse_run_config(const ordered_json& j, const fs::path& base) {
  if (!j.is_object()) throw ConfigError("", "run config must be a JSON object");
  RunConfig c;
  bool have_corpus = false, have_output = false;
  std::optional<model::Ablation> ablation;
  for (const auto& [key, v] : j.items()) {
    if (key == "corpus") {
      c.corpus = path_field(v, "corpus", base);
      have_corpus = true;
    } else if (key == "regions") {
      c.regions = path_field(v, "regions", base);
    } else if (key == "output_dir") {
      c.output_dir = path_field(v, "output_dir", base);
      have_output = true;
    } else if (key == "checkpoint") {
      c.checkpoint = path_field(v, "checkpoint", base);
    } else if (key == "seed") {
      c.seed = count_field(v, "seed");
    } else if (key == "fold") {
      c.fold = count_field(v, "fold");
    } else if (key == "min_frequency") {
      c.min_frequency = static_cast<int>(count_field(v, "min_frequency"));
      if (c.min_frequency < 1) throw ConfigError("min_frequency", "must be at least 1");
    } else if (key == "ablation") {
      if (!v.is_string()) throw ConfigError("ablation", "must be a string");
      try {
        ablation = model::parse_ablation(v.get<std::string>());
      } catch (const ConfigError& e) {
        throw ConfigError("ablation", e.what());
      }
    } else if (key == "split_mode") {
      if (!v.is_string()) throw ConfigError("split_mode", "must be a string");
      try {
        c.split_mode = data::parse_split_mode(v.get<std::string>());
      } catch (const Error& e) {
        throw ConfigError("split_mode", e.what());
      }
    } else if (key == "model") {
      if (v.is_object()) {
        if (v.contains("ablation")) throw ConfigError("model.ablation", "set the top-level \"ablation\" instead");
        if (v.contains("vocab_size")) throw ConfigError("model.vocab_size", "derived from the corpus, remove it");
        c.d_visual_given = v.contains("d_visual");
      }
      c.model = model::model_config_from_json(v, "model");
    } else if (key == "train") {
      if (v.is_object() && v.contains("seed")) throw ConfigError("train.seed", "set the top-level \"seed\" instead");
      c.train = train::train_config_from_json(v, "train");
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  if (!have_corpus) throw ConfigError("corpus", "required");
  if (!have_output) throw ConfigError("output_dir", "required");
  if (ablation) c.model.ablation = *ablation;
  c.train.seed = c.seed;
  c.train.validate();
  if (c.split_mode == data::SplitMode::KFold5 && c.fold >= 5) throw ConfigError("fold", "must be 0..4 for kfold5");
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

void validate_paths(const RunConfig& c) {
  if (!fs::is_regular_file(c.corpus)) throw ConfigError("corpus", "no such file: " + c.corpus.string());
  if (c.regions && !fs::is_regular_file(*c.regions)) {
    throw ConfigError("regions", "no such file: " + c.regions->string());
  }
  if (model::uses_visual(c.model.ablation) && !c.regions) {
    throw ConfigError("regions", std::string("required for ablation ") + model::to_string(c.model.ablation));
  }
}

}  // namespace mmfeed::cli
