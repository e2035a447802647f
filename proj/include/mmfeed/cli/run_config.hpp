// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "mmfeed/data/split.hpp"
#include "mmfeed/model/config.hpp"
#include "mmfeed/train/train.hpp"

namespace mmfeed::cli {

// Everything one training run needs, read from a single JSON document:
//
//   {"corpus": "records.jsonl", "regions": "regions.jsonl", "output_dir": "run",
//    "checkpoint": "model.ckpt.json", "seed": 7, "ablation": "TVAR",
//    "split_mode": "holdout80_20", "fold": 0, "min_frequency": 1,
//    "model": {...ModelConfig...}, "train": {...TrainConfig...}}
//
// Only "corpus" and "output_dir" are required. Relative paths are taken
// relative to the config file. The top-level seed and ablation are the only
// places those values may be set; model.vocab_size comes from the corpus and
// model.d_visual defaults to the width of the region file.
struct RunConfig {
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> regions;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> checkpoint;
  std::uint64_t seed = 0;
  data::SplitMode split_mode = data::SplitMode::Holdout80_20;
  std::size_t fold = 0;
  int min_frequency = 1;
  model::ModelConfig model;
  bool d_visual_given = false;
  train::TrainConfig train;
};

// Throws ConfigError naming the offending field.
RunConfig parse_run_config(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Input files exist, fold is in range, visual ablations have a region file.
void validate_paths(const RunConfig& config);

}  // namespace mmfeed::cli
