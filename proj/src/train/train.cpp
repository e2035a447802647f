// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/train/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mmfeed/data/split.hpp"
#include "mmfeed/error.hpp"
#include "mmfeed/tensor/checkpoint.hpp"

namespace mmfeed::train {

using nlohmann::ordered_json;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be at least 1");
  if (!(lr > 0.0f)) throw ConfigError("train.lr", "must be positive");
  if (epochs < 1) throw ConfigError("train.epochs", "must be at least 1");
  if (!(clip_norm >= 0.0)) throw ConfigError("train.clip_norm", "must be non-negative");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("train.val_fraction", "must lie in [0, 1)");
}

ordered_json to_json(const TrainConfig& c) {
  ordered_json j;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["clip_norm"] = c.clip_norm;
  j["val_fraction"] = c.val_fraction;
  return j;
}

TrainConfig train_config_from_json(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    const std::string field = path.empty() ? key : path + "." + key;
    auto count = [&]() -> std::uint64_t {
      if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(field, "must be a non-negative integer");
      return v.get<std::uint64_t>();
    };
    auto number = [&]() -> double {
      if (!v.is_number()) throw ConfigError(field, "must be a number");
      return v.get<double>();
    };
    if (key == "batch_size") c.batch_size = count();
    else if (key == "epochs") c.epochs = count();
    else if (key == "seed") c.seed = count();
    else if (key == "lr") c.lr = static_cast<float>(number());
    else if (key == "clip_norm") c.clip_norm = number();
    else if (key == "val_fraction") c.val_fraction = number();
    else throw ConfigError(field, "unknown key");
  }
  return c;
}

namespace {

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(9);
  s << v;
  return s.str();
}

}  // namespace

std::string TrainLog::to_csv() const {
  std::string out = "epoch,train_loss,val_loss,seconds\n";
  for (const EpochLog& e : epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
           (e.val_loss ? format_double(*e.val_loss) : std::string()) + "," + format_double(e.seconds) + "\n";
  }
  return out;
}

std::vector<Example> make_examples(std::span<const data::Sample> samples, std::span<const std::size_t> articles,
                                   const data::Vocabulary& vocab, const model::ModelConfig& config,
                                   const region::RegionMap* regions) {
  std::vector<Example> out;
  for (std::size_t a : articles) {
    const data::Sample& s = samples[a];
    const region::RegionFeatureSet* rfs = nullptr;
    if (regions != nullptr) {
      auto it = regions->find(s.image_ref);
      if (it != regions->end()) rfs = &it->second;
    }
    if (rfs == nullptr && model::uses_visual(config.ablation)) {
      throw Error("article " + s.id + ": no region features for image_ref \"" + s.image_ref + "\"");
    }
    const TokenIds article_ids = data::encode_article(s, vocab, config.max_text_len);
    for (const data::Comment& c : s.comments) {
      out.push_back({a, article_ids, data::encode_comment(c.text, vocab, config.max_gen_len), rfs});
    }
  }
  return out;
}

template <class T>
Var<T> batch_loss(const model::Forward<T>& f, std::span<const Example> batch) {
  if (batch.empty()) throw Error("empty batch");
  Var<T> total = model::sequence_loss(f, batch[0].article_ids, batch[0].comment_ids, batch[0].regions);
  for (std::size_t i = 1; i < batch.size(); ++i) {
    total = add(total, model::sequence_loss(f, batch[i].article_ids, batch[i].comment_ids, batch[i].regions));
  }
  return batch.size() == 1 ? total : scale(total, T(1) / static_cast<T>(batch.size()));
}

template Var<float> batch_loss(const model::Forward<float>&, std::span<const Example>);
template Var<double> batch_loss(const model::Forward<double>&, std::span<const Example>);

double teacher_forced_loss(const ParameterStore& params, const model::ModelConfig& config,
                           std::span<const Example> batch) {
  if (batch.empty()) throw Error("empty batch");
  double total = 0;
  for (const Example& ex : batch) {
    Graph<float> g;
    const auto f = model::bind(g, config, params, false);
    total += model::sequence_loss(f, ex.article_ids, ex.comment_ids, ex.regions).value()[0];
  }
  return total / double(batch.size());
}

// --- checkpoints -------------------------------------------------------------

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  CheckpointDocument doc;
  doc.config["model"] = model::to_json(ckpt.model);
  doc.config["vocabulary"]["min_frequency"] = ckpt.vocab.min_frequency();
  doc.config["vocabulary"]["tokens"] = ckpt.vocab.entries();
  doc.params = ckpt.params.entries();
  return mmfeed::checkpoint_to_string(doc);
}

Checkpoint checkpoint_from_string(const std::string& text) {
  CheckpointDocument doc = mmfeed::checkpoint_from_string(text);
  Checkpoint ckpt;
  try {
    if (!doc.config.contains("model") || !doc.config.contains("vocabulary")) {
      throw ParseError("checkpoint config needs \"model\" and \"vocabulary\"");
    }
    ckpt.model = model::model_config_from_json(doc.config.at("model"), "config.model");
    const auto& v = doc.config.at("vocabulary");
    ckpt.vocab = data::Vocabulary(v.at("tokens").get<std::vector<std::string>>(), v.at("min_frequency").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint config: ") + e.what());
  }
  if (ckpt.vocab.size() != ckpt.model.vocab_size) {
    throw ParseError("checkpoint vocabulary has " + std::to_string(ckpt.vocab.size()) + " entries, model expects " +
                     std::to_string(ckpt.model.vocab_size));
  }
  for (auto& [name, t] : doc.params) ckpt.params.add(name, std::move(t));
  model::check_parameters(ckpt.params, ckpt.model);
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << checkpoint_to_string(ckpt);
    if (!out.flush()) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const model::ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Checkpoint ckpt = checkpoint_from_string(buf.str());
  if (expected != nullptr && !(ckpt.model == *expected)) {
    throw ConfigError("model", "checkpoint " + path.string() + " was trained with a different model configuration (d_model " +
                                   std::to_string(ckpt.model.d_model) + ", expected " +
                                   std::to_string(expected->d_model) + ")");
  }
  return ckpt;
}

// --- training loop -----------------------------------------------------------

namespace {

constexpr std::uint64_t kValidationSalt = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kDropoutSalt = 0xbf58476d1ce4e5b9ull;
constexpr std::uint64_t kShuffleSalt = 0x94d049bb133111ebull;

bool finite(const GradientMap& grads) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) return false;
  }
  return true;
}

}  // namespace

TrainResult train(const TrainRequest& req) {
  req.train.validate();
  req.model.validate();
  if (req.model.vocab_size != req.vocab.size()) {
    throw ConfigError("model.vocab_size", "is " + std::to_string(req.model.vocab_size) + " but the vocabulary has " +
                                              std::to_string(req.vocab.size()) + " entries");
  }
  if (req.train_articles.empty()) throw Error("training split is empty");

  const data::Partition val_split =
      req.train.val_fraction > 0 ? data::holdout(req.train_articles, req.train.val_fraction, req.train.seed ^ kValidationSalt)
                                 : data::Partition{req.train_articles, {}};
  const auto train_examples = make_examples(req.samples, val_split.train, req.vocab, req.model, req.regions);
  const auto val_examples = make_examples(req.samples, val_split.test, req.vocab, req.model, req.regions);
  if (train_examples.empty()) throw Error("training split has no comments");

  if (req.output_dir) std::filesystem::create_directories(*req.output_dir);

  TrainResult result;
  ParameterStore params = model::init_parameters(req.model, req.train.seed);
  result.last = {req.model, req.vocab, params};
  result.best = result.last;
  double best_loss = std::numeric_limits<double>::infinity();

  std::mt19937_64 dropout_rng(req.train.seed ^ kDropoutSalt);
  const AdamOptions adam{req.train.lr};

  for (std::size_t epoch = 1; epoch <= req.train.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = data::seeded_permutation(train_examples.size(), req.train.seed ^ (kShuffleSalt * epoch));
    double loss_sum = 0;
    std::size_t seen = 0;
    std::vector<Example> batch;
    bool failed = false;

    for (std::size_t pos = 0; pos < order.size() && !failed; pos += req.train.batch_size) {
      batch.clear();
      for (std::size_t i = pos; i < std::min(order.size(), pos + req.train.batch_size); ++i) {
        batch.push_back(train_examples[order[i]]);
      }
      try {
        Graph<float> g;
        model::Forward<float> f = model::bind(g, req.model, params, true);
        f.dropout_rng = &dropout_rng;
        Var<float> loss = batch_loss(f, batch);
        g.backward(loss);
        GradientMap grads = g.parameter_gradients();
        if (!finite(grads)) throw NumericError("non-finite gradient");
        if (req.train.clip_norm > 0) clip_global_norm(grads, req.train.clip_norm);
        adam_step(params, grads, adam);
        for (const auto& [name, t] : params.entries()) {
          if (!t.all_finite()) throw NumericError("non-finite parameter " + name);
        }
        loss_sum += double(loss.value()[0]) * double(batch.size());
        seen += batch.size();
      } catch (const NumericError& e) {
        failed = true;
        result.diverged = true;
        result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
      }
    }
    if (failed) break;

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / double(seen);
    if (!val_examples.empty()) entry.val_loss = teacher_forced_loss(params, req.model, val_examples);
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(entry);

    result.last = {req.model, req.vocab, params};
    const double selection = entry.val_loss.value_or(entry.train_loss);
    const bool improved = selection < best_loss;
    if (improved) {
      best_loss = selection;
      result.best = result.last;
    }
    if (req.output_dir) {
      save_checkpoint(*req.output_dir / "last.ckpt.json", result.last);
      if (improved) save_checkpoint(*req.output_dir / "best.ckpt.json", result.best);
    }
  }

  if (req.output_dir) {
    std::ofstream log(*req.output_dir / "train_log.csv", std::ios::binary | std::ios::trunc);
    log << result.log.to_csv();
  }
  return result;
}

}  // namespace mmfeed::train
