// SPDX-License-Identifier: Apache-2.0
// mmfeed: data preparation, training, generation and evaluation driver.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmfeed/cli/run_config.hpp"
#include "mmfeed/data/records.hpp"
#include "mmfeed/data/split.hpp"
#include "mmfeed/data/stats.hpp"
#include "mmfeed/error.hpp"
#include "mmfeed/eval/suite.hpp"
#include "mmfeed/train/train.hpp"

namespace fs = std::filesystem;
using namespace mmfeed;

namespace {

// Bad invocation detected after argument parsing (missing file, ...).
struct UsageError : Error {
  using Error::Error;
};

void require_file(const fs::path& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw UsageError(std::string(what) + ": no such file: " + path.string());
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw UsageError(std::string(what) + ": cannot read " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw Error("write failed: " + path.string());
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::optional<region::RegionMap> load_regions(const std::string& path) {
  if (path.empty()) return std::nullopt;
  require_file(path, "--regions");
  return region::load_region_features_file(path);
}

train::Checkpoint load_ckpt(const std::string& path) {
  require_file(path, "--ckpt");
  return train::load_checkpoint(path);
}

void require_regions_for(const train::Checkpoint& ckpt, const std::optional<region::RegionMap>& regions) {
  if (model::uses_visual(ckpt.model.ablation) && !regions) {
    throw UsageError(std::string("checkpoint uses ablation ") + model::to_string(ckpt.model.ablation) +
                     ", pass --regions");
  }
}

eval::EmbeddingProvider make_provider(const std::string& kind, const std::string& embeddings,
                                      const std::optional<train::Checkpoint>& ckpt) {
  if (kind != "encoder" && kind != "external") throw UsageError("--provider must be encoder or external");
  if (kind == "external") {
    if (embeddings.empty()) throw UsageError("--provider external needs --embeddings");
    require_file(embeddings, "--embeddings");
    return eval::external_file_provider(embeddings);
  }
  if (!ckpt) throw UsageError("--provider encoder needs --ckpt");
  return eval::encoder_provider(*ckpt);
}

// --- prep-data -----------------------------------------------------------------

struct PrepArgs {
  std::string in, out, format = "auto", delimiter = ":";
};

int cmd_prep(const PrepArgs& a) {
  require_file(a.in, "--in");
  if (fs::file_size(a.in) == 0) throw UsageError("--in: empty file " + a.in);
  if (a.delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
  std::string format = a.format;
  if (format == "auto") format = fs::path(a.in).extension() == ".csv" ? "legacy" : "records";

  std::vector<data::Sample> samples;
  std::size_t skipped = 0;
  if (format == "legacy") {
    auto parsed = data::parse_legacy_csv_file(a.in, a.delimiter[0]);
    for (const auto& e : parsed.errors) std::cerr << "row " << e.row << ": " << e.reason << "\n";
    skipped = parsed.errors.size();
    samples = std::move(parsed.samples);
  } else if (format == "records") {
    samples = data::parse_records_file(a.in);
  } else {
    throw UsageError("--format must be auto, legacy or records");
  }
  for (auto& s : samples) s = data::normalize_sample(std::move(s));
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  data::write_records_file(a.out, samples);
  std::cerr << "prep-data: wrote " << samples.size() << " records, skipped " << skipped << " rows\n";
  return 0;
}

// --- stats -----------------------------------------------------------------------

int cmd_stats(const std::string& in, const std::string& split) {
  require_file(in, "--in");
  const auto samples = data::parse_records_file(in);
  std::vector<data::Sample> selected;
  if (split.empty()) {
    selected = samples;
  } else {
    data::SplitMode mode;
    try {
      mode = data::parse_split_mode(split);
    } catch (const Error& e) {
      throw UsageError(std::string("--split: ") + e.what());
    }
    if (mode != data::SplitMode::Low && mode != data::SplitMode::Mid && mode != data::SplitMode::High) {
      throw UsageError("--split must be low, mid or high");
    }
    for (std::size_t i : data::select_articles(samples, mode)) selected.push_back(samples[i]);
  }
  const auto st = data::corpus_stats(selected);
  std::cout << "articles                   " << st.n_articles << "\n"
            << "samples                    " << st.n_samples << "\n"
            << "avg comments per article   " << fixed(st.avg_comments_per_article, 2) << "\n"
            << "avg likes per comment      " << fixed(st.avg_likes_per_comment, 2) << "\n"
            << "avg text length (words)    " << fixed(st.avg_text_len_words, 2) << "\n"
            << "avg comment length (words) " << fixed(st.avg_comment_len_words, 2) << "\n";
  return 0;
}

// --- train -----------------------------------------------------------------------

struct TrainArgs {
  std::string config, output_dir, ablation;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
};

int cmd_train(const TrainArgs& a) {
  require_file(a.config, "--config");
  cli::RunConfig rc = cli::load_run_config(a.config);
  if (a.seed) rc.seed = rc.train.seed = *a.seed;
  if (a.epochs) rc.train.epochs = *a.epochs;
  if (!a.ablation.empty()) {
    try {
      rc.model.ablation = model::parse_ablation(a.ablation);
    } catch (const ConfigError& e) {
      throw ConfigError("--ablation", e.what());
    }
  }
  if (!a.output_dir.empty()) rc.output_dir = a.output_dir;
  rc.train.validate();
  cli::validate_paths(rc);

  const auto samples = data::parse_records_file(rc.corpus);
  std::optional<region::RegionMap> regions;
  if (rc.regions) regions = region::load_region_features_file(*rc.regions);
  if (regions && !rc.d_visual_given && !regions->empty()) rc.model.d_visual = regions->begin()->second.d_visual();

  const auto partitions = data::split_dataset(samples, rc.split_mode, rc.seed);
  const data::Partition& part = partitions.at(rc.split_mode == data::SplitMode::KFold5 ? rc.fold : 0);
  if (part.train.empty()) throw Error("the training split is empty");

  std::vector<data::Sample> train_samples;
  for (std::size_t i : part.train) train_samples.push_back(samples[i]);
  train::TrainRequest req;
  req.samples = samples;
  req.train_articles = part.train;
  req.regions = regions ? &*regions : nullptr;
  req.vocab = data::build_vocab(train_samples, rc.min_frequency);
  req.model = rc.model;
  req.model.vocab_size = req.vocab.size();
  req.model.validate();
  req.train = rc.train;
  req.output_dir = rc.output_dir;

  fs::create_directories(rc.output_dir);
  std::vector<data::Sample> test_samples;
  for (std::size_t i : part.test) test_samples.push_back(samples[i]);
  data::write_records_file(rc.output_dir / "test.jsonl", test_samples);
  data::write_records_file(rc.output_dir / "train.jsonl", train_samples);

  const auto result = train::train(req);
  if (rc.checkpoint) train::save_checkpoint(*rc.checkpoint, result.best);
  for (const auto& e : result.log.epochs) {
    std::cerr << "epoch " << e.epoch << "  train_loss " << fixed(e.train_loss, 6)
              << (e.val_loss ? "  val_loss " + fixed(*e.val_loss, 6) : std::string()) << "\n";
  }
  if (result.diverged) {
    std::cerr << "train: diverged (" << result.message << "); kept the last good checkpoint\n";
    return 1;
  }
  std::cerr << "train: " << result.log.epochs.size() << " epochs, checkpoints in " << rc.output_dir.string() << "\n";
  return 0;
}

// --- generate / evaluate / rank / worksheet ---------------------------------------

struct ModelArgs {
  std::string ckpt, in, regions;
};

std::vector<std::string> generate_all(const train::Checkpoint& ckpt, const std::optional<region::RegionMap>& regions,
                                      std::span<const data::Sample> samples) {
  const auto gen = eval::model_generator(ckpt, regions ? &*regions : nullptr);
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(gen(s));
  return out;
}

int cmd_generate(const ModelArgs& a, const std::string& out_path) {
  const auto ckpt = load_ckpt(a.ckpt);
  require_file(a.in, "--in");
  const auto regions = load_regions(a.regions);
  require_regions_for(ckpt, regions);
  const auto samples = data::parse_records_file(a.in);
  const auto feedback = generate_all(ckpt, regions, samples);
  std::string text;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    nlohmann::ordered_json j;
    j["id"] = samples[i].id;
    j["feedback"] = feedback[i];
    text += j.dump() + "\n";
  }
  write_text(out_path, text);
  return 0;
}

int cmd_evaluate(const ModelArgs& a, const std::string& report_path, const std::string& provider_kind,
                 const std::string& embeddings, const std::string& articles_path) {
  const auto ckpt = load_ckpt(a.ckpt);
  require_file(a.in, "--in");
  const auto regions = load_regions(a.regions);
  require_regions_for(ckpt, regions);
  const auto provider = make_provider(provider_kind, embeddings, ckpt);
  const auto samples = data::parse_records_file(a.in);
  const auto suite = eval::evaluate_suite(samples, eval::model_generator(ckpt, regions ? &*regions : nullptr), provider);
  write_text(report_path, eval::report_csv(suite.report));
  if (!articles_path.empty()) {
    std::string text = "id,rank,score,generated_feedback\n";
    for (const auto& r : suite.articles) {
      text += eval::csv_field(r.id) + "," + std::to_string(r.rank.rank) + "," + fixed(r.rank.score, 6) + "," +
              eval::csv_field(r.generated) + "\n";
    }
    write_text(articles_path, text);
  }
  std::cout << eval::report_table(suite.report);
  return 0;
}

std::map<std::string, std::string> read_feedback_file(const std::string& path) {
  require_file(path, "--feedback-file");
  std::ifstream in(path, std::ios::binary);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out[j.at("id").get<std::string>()] = j.at("feedback").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("feedback file: ") + e.what(), line_no);
    }
  }
  return out;
}

int cmd_rank(const std::string& feedback_path, const std::string& in, const std::string& provider_kind,
             const std::string& ckpt_path, const std::string& embeddings) {
  const auto feedback = read_feedback_file(feedback_path);
  require_file(in, "--in");
  std::optional<train::Checkpoint> ckpt;
  if (!ckpt_path.empty()) ckpt = load_ckpt(ckpt_path);
  const auto provider = make_provider(provider_kind, embeddings, ckpt);
  const auto samples = data::parse_records_file(in);
  std::vector<std::size_t> ranks;
  std::cout << "id,rank,score\n";
  for (const auto& s : samples) {
    auto it = feedback.find(s.id);
    if (it == feedback.end() || s.comments.empty()) continue;
    const auto r = eval::rank_feedback(it->second, s.comments, provider);
    ranks.push_back(r.rank);
    std::cout << eval::csv_field(s.id) << "," << r.rank << "," << fixed(r.score, 6) << "\n";
  }
  if (ranks.empty()) throw Error("rank: no article of --in has feedback in --feedback-file");
  std::cerr << "provider " << provider.provenance << "  MRR " << fixed(eval::mrr(ranks), 4);
  for (std::size_t k : eval::kDefaultKs) std::cerr << "  R@" << k << " " << fixed(eval::recall_at_k(ranks, k), 2) << "%";
  std::cerr << "\n";
  return 0;
}

int cmd_worksheet(const ModelArgs& a, const std::string& out_path, const std::string& feedback_path) {
  require_file(a.in, "--in");
  const auto samples = data::parse_records_file(a.in);
  std::vector<std::string> generated;
  if (!feedback_path.empty()) {
    const auto feedback = read_feedback_file(feedback_path);
    for (const auto& s : samples) {
      auto it = feedback.find(s.id);
      generated.push_back(it == feedback.end() ? std::string() : it->second);
    }
  } else {
    if (a.ckpt.empty()) throw UsageError("worksheet needs --ckpt or --feedback-file");
    const auto ckpt = load_ckpt(a.ckpt);
    const auto regions = load_regions(a.regions);
    require_regions_for(ckpt, regions);
    generated = generate_all(ckpt, regions, samples);
  }
  write_text(out_path, eval::worksheet_csv(samples, generated));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmfeed: multimodal feedback generation toolkit"};
  app.require_subcommand(1);

  PrepArgs prep;
  auto* c_prep = app.add_subcommand("prep-data", "Normalize a legacy CSV or records file into canonical records");
  c_prep->add_option("--in", prep.in, "legacy .csv or records .jsonl")->required();
  c_prep->add_option("--out", prep.out, "canonical records output")->required();
  c_prep->add_option("--format", prep.format, "auto, legacy or records")->capture_default_str();
  c_prep->add_option("--delimiter", prep.delimiter, "join character of legacy Comment/Likes")->capture_default_str();

  std::string stats_in, stats_split;
  auto* c_stats = app.add_subcommand("stats", "Print corpus statistics");
  c_stats->add_option("--in", stats_in, "records file")->required();
  c_stats->add_option("--split", stats_split, "restrict to low, mid or high comment counts");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a model from a run config");
  c_train->add_option("--config", tr.config, "run config JSON")->required();
  c_train->add_option("--seed", tr.seed, "override the run seed");
  c_train->add_option("--epochs", tr.epochs, "override train.epochs");
  c_train->add_option("--ablation", tr.ablation, "override the ablation (T, TV, TVA, TVAR)");
  c_train->add_option("--output-dir", tr.output_dir, "override output_dir");

  ModelArgs gen;
  std::string gen_out;
  auto* c_gen = app.add_subcommand("generate", "Generate feedback for every article");
  c_gen->add_option("--ckpt", gen.ckpt, "checkpoint")->required();
  c_gen->add_option("--in", gen.in, "records file")->required();
  c_gen->add_option("--regions", gen.regions, "region-feature file");
  c_gen->add_option("--out", gen_out, "output JSONL of {id, feedback}")->required();

  ModelArgs ev;
  std::string ev_report, ev_provider = "encoder", ev_embeddings, ev_articles;
  auto* c_eval = app.add_subcommand("evaluate", "Generate and score feedback against the comments");
  c_eval->add_option("--ckpt", ev.ckpt, "checkpoint")->required();
  c_eval->add_option("--in", ev.in, "records file (test split)")->required();
  c_eval->add_option("--regions", ev.regions, "region-feature file");
  c_eval->add_option("--report", ev_report, "report CSV")->required();
  c_eval->add_option("--provider", ev_provider, "embedding provider: encoder or external")->capture_default_str();
  c_eval->add_option("--embeddings", ev_embeddings, "external embeddings JSONL");
  c_eval->add_option("--articles", ev_articles, "per-article CSV of ranks and generated text");

  std::string rk_feedback, rk_in, rk_provider = "encoder", rk_ckpt, rk_embeddings;
  auto* c_rank = app.add_subcommand("rank", "Rank generated feedback against liked comments");
  c_rank->add_option("--feedback-file", rk_feedback, "JSONL of {id, feedback}")->required();
  c_rank->add_option("--in", rk_in, "records file")->required();
  c_rank->add_option("--provider", rk_provider, "encoder or external")->capture_default_str();
  c_rank->add_option("--ckpt", rk_ckpt, "checkpoint for the encoder provider");
  c_rank->add_option("--embeddings", rk_embeddings, "external embeddings JSONL");

  ModelArgs ws;
  std::string ws_out, ws_feedback;
  auto* c_ws = app.add_subcommand("worksheet", "Export a human-evaluation worksheet");
  c_ws->add_option("--ckpt", ws.ckpt, "checkpoint (unless --feedback-file is given)");
  c_ws->add_option("--in", ws.in, "records file")->required();
  c_ws->add_option("--regions", ws.regions, "region-feature file");
  c_ws->add_option("--feedback-file", ws_feedback, "JSONL of {id, feedback} instead of generating");
  c_ws->add_option("--out", ws_out, "worksheet CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_prep->parsed()) return cmd_prep(prep);
    if (c_stats->parsed()) return cmd_stats(stats_in, stats_split);
    if (c_train->parsed()) return cmd_train(tr);
    if (c_gen->parsed()) return cmd_generate(gen, gen_out);
    if (c_eval->parsed()) return cmd_evaluate(ev, ev_report, ev_provider, ev_embeddings, ev_articles);
    if (c_rank->parsed()) return cmd_rank(rk_feedback, rk_in, rk_provider, rk_ckpt, rk_embeddings);
    if (c_ws->parsed()) return cmd_worksheet(ws, ws_out, ws_feedback);
  } catch (const UsageError& e) {
    std::cerr << "mmfeed: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "mmfeed: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mmfeed: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
