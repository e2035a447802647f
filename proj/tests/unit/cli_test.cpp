// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmfeed/cli/run_config.hpp"
#include "mmfeed/data/records.hpp"
#include "mmfeed/error.hpp"

namespace fs = std::filesystem;
using namespace mmfeed;
using nlohmann::ordered_json;

namespace {

const std::string kFixtures = MMFEED_FIXTURES;
const std::string kCli = MMFEED_CLI;

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mmfeed_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run(const fs::path& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "'" + kCli + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

ordered_json base_config(const fs::path& out_dir) {
  return ordered_json{{"corpus", kFixtures + "/overfit.jsonl"},
                      {"output_dir", out_dir.string()},
                      {"seed", 3},
                      {"ablation", "T"},
                      {"split_mode", "all"},
                      {"model",
                       {{"d_model", 8},
                        {"n_heads", 2},
                        {"n_layers_enc", 1},
                        {"n_layers_dec", 1},
                        {"d_ffn_hidden", 16},
                        {"dropout", 0.0},
                        {"max_gen_len", 5}}},
                      {"train", {{"batch_size", 4}, {"epochs", 1}, {"val_fraction", 0.0}}}};
}

void write_json(const fs::path& p, const ordered_json& j) { std::ofstream(p) << j.dump(2); }

std::string config_error_path(const ordered_json& j) {
  try {
    cli::parse_run_config(j, "/base");
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

}  // namespace

TEST(RunConfig, ParsesAndResolvesPaths) {
  ordered_json j{{"corpus", "c.jsonl"}, {"output_dir", "/abs/run"}, {"regions", "r.jsonl"}, {"seed", 5},
                 {"ablation", "TVA"}, {"split_mode", "kfold5"}, {"fold", 2}};
  const auto c = cli::parse_run_config(j, "/base/dir");
  EXPECT_EQ(c.corpus, fs::path("/base/dir/c.jsonl"));
  EXPECT_EQ(c.output_dir, fs::path("/abs/run"));
  EXPECT_EQ(*c.regions, fs::path("/base/dir/r.jsonl"));
  EXPECT_EQ(c.train.seed, 5u);
  EXPECT_EQ(c.model.ablation, model::Ablation::TVA);
  EXPECT_EQ(c.split_mode, data::SplitMode::KFold5);
  EXPECT_EQ(c.fold, 2u);
  EXPECT_FALSE(c.d_visual_given);
}

TEST(RunConfig, ErrorsNameTheField) {
  const ordered_json ok{{"corpus", "c"}, {"output_dir", "o"}};
  auto with = [&](const std::string& key, ordered_json v) {
    ordered_json j = ok;
    j[key] = std::move(v);
    return j;
  };
  EXPECT_EQ(config_error_path(with("colour", 1)), "colour");
  EXPECT_EQ(config_error_path(with("model", {{"d_model", "big"}})), "model.d_model");
  EXPECT_EQ(config_error_path(with("model", {{"ablation", "T"}})), "model.ablation");
  EXPECT_EQ(config_error_path(with("train", {{"seed", 1}})), "train.seed");
  EXPECT_EQ(config_error_path(with("train", {{"epochs", -1}})), "train.epochs");
  EXPECT_EQ(config_error_path(with("ablation", "XYZ")), "ablation");
  ordered_json fold = with("split_mode", "kfold5");
  fold["fold"] = 7;
  EXPECT_EQ(config_error_path(fold), "fold");
  EXPECT_EQ(config_error_path(ordered_json{{"output_dir", "o"}}), "corpus");
}

TEST(RunConfig, VisualAblationNeedsRegionFile) {
  const auto dir = scratch("paths");
  ordered_json j = base_config(dir);
  j["ablation"] = "TV";
  const auto c = cli::parse_run_config(j, dir);
  try {
    cli::validate_paths(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "regions");
  }
}

TEST(Cli, PrepDataLegacyFixture) {
  const auto dir = scratch("prep");
  const auto r = run(dir, "prep-data --in '" + kFixtures + "/legacy.csv' --out '" + (dir / "out.jsonl").string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("2"), std::string::npos);
  const auto samples = data::parse_records_file(dir / "out.jsonl");
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_EQ(samples[0].text, "the mayor said: \"do not worry, it is safe.\"");
  const auto again = run(dir, "prep-data --in '" + kFixtures + "/legacy.csv' --out '" + (dir / "again.jsonl").string() + "'");
  EXPECT_EQ(again.code, 0);
  EXPECT_EQ(slurp(dir / "out.jsonl"), slurp(dir / "again.jsonl"));
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = scratch("usage");
  std::ofstream(dir / "empty.csv").close();
  EXPECT_EQ(run(dir, "prep-data --in '" + (dir / "empty.csv").string() + "' --out '" + (dir / "x").string() + "'").code, 2);
  EXPECT_EQ(run(dir, "prep-data --in '" + (dir / "missing.csv").string() + "' --out x").code, 2);
  EXPECT_EQ(run(dir, "stats").code, 2);
  EXPECT_EQ(run(dir, "no-such-command").code, 2);
  EXPECT_EQ(run(dir, "stats --in '" + kFixtures + "/records3.jsonl' --split thirds").code, 2);
}

TEST(Cli, StatsMidSplit) {
  const auto dir = scratch("stats");
  const auto r = run(dir, "stats --in '" + kFixtures + "/ranges.jsonl' --split mid");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("articles                   1\n"), std::string::npos) << r.out;
}

TEST(Cli, ConfigSchemaViolationExitsTwoWithPath) {
  const auto dir = scratch("schema");
  ordered_json j = base_config(dir / "run");
  j["train"]["epochs"] = "many";
  write_json(dir / "run.json", j);
  const auto r = run(dir, "train --config '" + (dir / "run.json").string() + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("train.epochs"), std::string::npos) << r.err;
}

TEST(Cli, TrainGenerateEvaluateTextOnly) {
  const auto dir = scratch("pipeline");
  write_json(dir / "run.json", base_config(dir / "run"));
  const auto tr = run(dir, "train --config '" + (dir / "run.json").string() + "'");
  ASSERT_EQ(tr.code, 0) << tr.err;
  const auto ckpt = (dir / "run" / "best.ckpt.json").string();
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(dir / "run" / "train_log.csv"));

  const std::string in = kFixtures + "/overfit.jsonl";
  ASSERT_EQ(run(dir, "generate --ckpt '" + ckpt + "' --in '" + in + "' --out '" + (dir / "g1.jsonl").string() + "'").code, 0);
  ASSERT_EQ(run(dir, "generate --ckpt '" + ckpt + "' --in '" + in + "' --out '" + (dir / "g2.jsonl").string() + "'").code, 0);
  EXPECT_EQ(slurp(dir / "g1.jsonl"), slurp(dir / "g2.jsonl"));

  const auto ev = run(dir, "evaluate --ckpt '" + ckpt + "' --in '" + in + "' --report '" + (dir / "report.csv").string() + "'");
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(slurp(dir / "report.csv").rfind("provider,n_articles,bleu4,cider,rouge_l,meteor,mrr,recall@1", 0), 0u);

  const auto ws = run(dir, "worksheet --ckpt '" + ckpt + "' --in '" + in + "' --out '" + (dir / "ws.csv").string() + "'");
  ASSERT_EQ(ws.code, 0) << ws.err;
  EXPECT_EQ(slurp(dir / "ws.csv").rfind("id,text_excerpt", 0), 0u);

  const auto rk = run(dir, "rank --feedback-file '" + (dir / "g1.jsonl").string() + "' --in '" + in + "' --ckpt '" + ckpt + "'");
  ASSERT_EQ(rk.code, 0) << rk.err;
  EXPECT_EQ(rk.out.rfind("id,rank,score\n", 0), 0u);
}

TEST(Cli, WrongCheckpointIsRuntimeError) {
  const auto dir = scratch("badckpt");
  std::ofstream(dir / "bad.json") << "{}";
  const auto r = run(dir, "generate --ckpt '" + (dir / "bad.json").string() + "' --in '" + kFixtures +
                              "/overfit.jsonl' --out '" + (dir / "g.jsonl").string() + "'");
  EXPECT_EQ(r.code, 1);
}
