// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmfeed/data/sample.hpp"
#include "mmfeed/data/vocab.hpp"
#include "mmfeed/model/model.hpp"
#include "mmfeed/region/region.hpp"
#include "mmfeed/tensor/optim.hpp"

namespace mmfeed::train {

struct TrainConfig {
  std::size_t batch_size = 32;
  float lr = 5e-4f;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  double clip_norm = 1.0;       // global gradient norm; 0 disables clipping
  double val_fraction = 0.1;    // of the training articles, held out for model selection

  void validate() const;  // ConfigError with "train.<field>"
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::ordered_json& j, const std::string& path = "train");

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  std::optional<double> val_loss;
  double seconds = 0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;

  // Header "epoch,train_loss,val_loss,seconds"; an empty val_loss means no
  // validation articles.
  std::string to_csv() const;
};

// One (article, comment) pair ready for the model.
struct Example {
  std::size_t article = 0;  // index into the corpus
  TokenIds article_ids;
  TokenIds comment_ids;  // BOS ... EOS
  const region::RegionFeatureSet* regions = nullptr;
};

// Examples for every comment of the listed articles. Region features are
// looked up by image_ref when `regions` is given; visual ablations need one
// for every article.
std::vector<Example> make_examples(std::span<const data::Sample> samples, std::span<const std::size_t> articles,
                                   const data::Vocabulary& vocab, const model::ModelConfig& config,
                                   const region::RegionMap* regions);

// Mean teacher-forced loss over `batch` on the graph of `f`.
template <class T>
Var<T> batch_loss(const model::Forward<T>& f, std::span<const Example> batch);

// Inference-mode (no dropout) mean loss; throws on an empty batch.
double teacher_forced_loss(const ParameterStore& params, const model::ModelConfig& config,
                           std::span<const Example> batch);

// --- checkpoints -------------------------------------------------------------

struct Checkpoint {
  model::ModelConfig model;
  data::Vocabulary vocab;
  ParameterStore params;
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);
// Written through a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Parameters are checked against the embedded model configuration, and
// against `expected` when given.
Checkpoint load_checkpoint(const std::filesystem::path& path, const model::ModelConfig* expected = nullptr);

// --- training loop -----------------------------------------------------------

struct TrainRequest {
  std::span<const data::Sample> samples;
  std::vector<std::size_t> train_articles;  // indices into samples
  const region::RegionMap* regions = nullptr;
  data::Vocabulary vocab;
  model::ModelConfig model;
  TrainConfig train;
  // When set, last.ckpt.json is rewritten after every epoch, best.ckpt.json
  // whenever the selection loss improves, and train_log.csv at the end.
  std::optional<std::filesystem::path> output_dir;
};

struct TrainResult {
  Checkpoint best;  // lowest validation loss (training loss without validation)
  Checkpoint last;  // after the final completed epoch
  TrainLog log;
  bool diverged = false;
  std::string message;
};

// Deterministic for a fixed request. A non-finite loss or gradient stops
// training; the result then holds the last completed epoch.
TrainResult train(const TrainRequest& request);

}  // namespace mmfeed::train
