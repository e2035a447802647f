// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "mmfeed/data/records.hpp"
#include "mmfeed/data/vocab.hpp"
#include "mmfeed/region/region.hpp"
#include "mmfeed/train/train.hpp"

namespace testing_support {

// The eight-article memorization corpus with its region features, and a
// request that trains on all of it.
struct OverfitFixture {
  std::vector<mmfeed::data::Sample> samples;
  mmfeed::region::RegionMap regions;
  mmfeed::data::Vocabulary vocab;

  explicit OverfitFixture(const std::string& dir)
      : samples(mmfeed::data::parse_records_file(dir + "/overfit.jsonl")),
        regions(mmfeed::region::load_region_features_file(dir + "/overfit_regions.jsonl")),
        vocab(mmfeed::data::build_vocab(samples, 1)) {}

  std::vector<std::size_t> all_articles() const {
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }

  mmfeed::model::ModelConfig model(mmfeed::model::Ablation ablation = mmfeed::model::Ablation::TVAR) const {
    mmfeed::model::ModelConfig c;
    c.d_model = 32;
    c.n_heads = 4;
    c.n_layers_enc = 2;
    c.n_layers_dec = 2;
    c.d_ffn_hidden = 64;
    c.d_visual = regions.begin()->second.d_visual();
    c.dropout = 0.f;
    c.vocab_size = vocab.size();
    c.max_text_len = 64;
    c.max_gen_len = 30;
    c.ablation = ablation;
    return c;
  }

  mmfeed::train::TrainRequest request(std::size_t epochs, std::uint64_t seed = 1,
                                      mmfeed::model::Ablation ablation = mmfeed::model::Ablation::TVAR) const {
    mmfeed::train::TrainRequest r;
    r.samples = samples;
    r.train_articles = all_articles();
    r.regions = &regions;
    r.vocab = vocab;
    r.model = model(ablation);
    r.train.batch_size = 1;
    r.train.lr = 5e-4f;
    r.train.epochs = epochs;
    r.train.seed = seed;
    r.train.val_fraction = 0.0;
    return r;
  }
};

}  // namespace testing_support
