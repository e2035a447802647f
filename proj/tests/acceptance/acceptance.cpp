// SPDX-License-Identifier: Apache-2.0
// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmfeed/data/records.hpp"
#include "mmfeed/data/stats.hpp"
#include "mmfeed/data/text.hpp"
#include "mmfeed/eval/metrics.hpp"
#include "mmfeed/eval/suite.hpp"
#include "mmfeed/kernels/kernels.hpp"
#include "mmfeed/region/region.hpp"
#include "support/oracles.hpp"
#include "support/overfit_fixture.hpp"
#include "support/random_text.hpp"
#include "support/table_provider.hpp"
#include "support/tiny_model.hpp"

namespace fs = std::filesystem;
using namespace mmfeed;

namespace {

const std::string kFixtures = MMFEED_FIXTURES;
const std::string kSourceDir = MMFEED_SOURCE_DIR;
const std::string kCli = MMFEED_CLI;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mmfeed_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = "'" + kCli + "' " + args + " >>'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 1 -------------------------------------------------------------------------
Outcome gradient_correctness() {
  const auto config = testing_support::tiny_config(model::Ablation::TVAR, 8, 16);
  const auto store = model::init_parameters(config, 2024);
  std::mt19937_64 rng(17);
  const auto rfs = testing_support::random_regions(rng, 3, config.d_visual);
  std::vector<train::Example> batch(2);
  for (auto& ex : batch) {
    ex.article_ids = testing_support::random_ids(rng, 6, config.vocab_size);
    ex.comment_ids = testing_support::framed(testing_support::random_ids(rng, 4, config.vocab_size));
    ex.regions = &rfs;
  }
  const auto r = testing_support::gradient_check(config, store, batch, 1e-3);
  std::size_t failing = 0;
  for (const auto& [name, rel] : r.relative_error) failing += rel > 1e-3 ? 1 : 0;
  return {failing == 0,
          fmt("%zu parameter tensors, worst relative error %.2e (%s), %zu over 1e-3; %zu of %zu elements straddle a "
              "ReLU kink at h=1e-3 and were differenced at h=1e-6 (plain h=1e-3 worst: %.2e)",
              r.relative_error.size(), r.worst, r.worst_name.c_str(), failing, r.kink_elements, store.element_count(),
              r.strict_worst)};
}

// 2 -------------------------------------------------------------------------
Outcome attention_normalization() {
  std::map<model::AttentionKind, std::size_t> calls;
  std::size_t total = 0, bad_rows = 0, bad_masked = 0, bad_causal = 0;
  double worst = 0;
  model::AttentionProbe probe = [&](const model::AttentionRecord& rec) {
    ++calls[rec.kind];
    ++total;
    for (std::size_t i = 0; i < rec.rows; ++i) {
      double sum = 0;
      for (std::size_t j = 0; j < rec.cols; ++j) {
        const double w = rec.weights[i * rec.cols + j];
        sum += w;
        if (!rec.allowed.empty() && rec.allowed[i * rec.cols + j] == 0 && w != 0.0) ++bad_masked;
        if (rec.kind == model::AttentionKind::DecoderSelf && j > i && w != 0.0) ++bad_causal;
      }
      worst = std::max(worst, std::abs(sum - 1.0));
      if (std::abs(sum - 1.0) > 1e-5) ++bad_rows;
    }
  };

  std::mt19937_64 rng(99);
  const std::size_t per_kind_target = 1000;
  auto enough = [&] {
    for (auto k : {model::AttentionKind::EncoderSelf, model::AttentionKind::DecoderSelf, model::AttentionKind::Cross,
                   model::AttentionKind::Multimodal, model::AttentionKind::Visual}) {
      if (calls[k] < per_kind_target / 5) return false;
    }
    return total >= per_kind_target;
  };
  std::size_t passes = 0;
  while (!enough()) {
    auto config = testing_support::tiny_config(model::Ablation::TVAR, 8, 16);
    config.d_visual = 2 + rng() % 6;
    const auto store = model::init_parameters(config, rng());
    const auto rfs = testing_support::random_regions(rng, 1 + rng() % 8, config.d_visual);
    TokenIds article = testing_support::random_ids(rng, 1 + rng() % 10, config.vocab_size);
    for (std::size_t pads = rng() % 4; pads > 0; --pads) article.insert(article.begin() + rng() % article.size(), kPadId);
    TokenIds comment = testing_support::framed(testing_support::random_ids(rng, 1 + rng() % 6, config.vocab_size));
    if (rng() % 3 == 0) comment.push_back(kPadId);
    Graph<float> g;
    auto f = model::bind(g, config, store, false);
    f.probe = &probe;
    model::sequence_loss(f, article, comment, &rfs);
    ++passes;
  }
  std::string per_kind;
  for (const auto& [k, n] : calls) per_kind += fmt(" %s=%zu", model::to_string(k), n);
  const bool pass = bad_rows == 0 && bad_masked == 0 && bad_causal == 0;
  return {pass, fmt("%zu calls from %zu forward passes (", total, passes) + per_kind.substr(1) +
                    fmt("), max |row sum - 1| %.1e, %zu bad rows, %zu nonzero masked, %zu nonzero future",
                        worst, bad_rows, bad_masked, bad_causal)};
}

// 3 -------------------------------------------------------------------------
Outcome overfit_reproduction() {
  const testing_support::OverfitFixture fx(kFixtures);
  const auto start = std::chrono::steady_clock::now();
  const auto result = train::train(fx.request(500, 1));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (result.diverged) return {false, "training diverged: " + result.message};
  const double final_loss = result.log.epochs.back().train_loss;

  const auto& ckpt = result.last;
  std::size_t exact = 0;
  for (const auto& s : fx.samples) {
    const auto ids = data::encode_article(s, fx.vocab, ckpt.model.max_text_len);
    const auto out = model::generate_greedy(ckpt.params, ckpt.model, ids, &fx.regions.at(s.image_ref));
    const auto truth = data::encode_comment(s.comments.front().text, fx.vocab, ckpt.model.max_gen_len);
    exact += TokenIds(truth.begin() + 1, truth.end() - 1) == out ? 1 : 0;
  }
  const auto suite = eval::evaluate_suite(fx.samples, eval::model_generator(ckpt, &fx.regions),
                                          eval::encoder_provider(ckpt));
  const bool pass = final_loss < 0.05 && exact >= 7 && suite.report.bleu4 >= 0.95;
  return {pass, fmt("%zu epochs in %.1fs, final loss %.5f (< 0.05), exact %zu/8 (>= 7), bleu4 %.4f (>= 0.95)",
                    result.log.epochs.size(), secs, final_loss, exact, suite.report.bleu4)};
}

// 4 -------------------------------------------------------------------------
Outcome metric_oracles() {
  std::mt19937_64 rng(4242);
  std::vector<eval::Tokens> cands;
  std::vector<eval::References> refs;
  for (int i = 0; i < 25; ++i) {
    auto cand = testing_support::random_sentence(rng, 2, 8);
    eval::Tokens ref;
    if (i % 2 == 0) {
      ref = cand;
      if (rng() % 2) ref[rng() % ref.size()] = "running";
      if (rng() % 2) std::swap(ref.front(), ref.back());
      if (rng() % 2) ref.push_back("mat");
    } else {
      ref = testing_support::random_sentence(rng, 1, 8);
    }
    cands.push_back(cand);
    refs.push_back({ref});
  }
  const auto cider_lib = eval::cider_scores(cands, refs);
  const auto cider_ref = oracle::cider(cands, refs);
  double worst[4] = {0, 0, 0, 0};
  std::size_t nonzero[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double lib[4] = {eval::bleu4(cands[i], refs[i]), eval::rouge_l(cands[i], refs[i]),
                           eval::meteor(cands[i], refs[i]), cider_lib[i]};
    const double ref[4] = {oracle::bleu(cands[i], refs[i]), oracle::rouge_l(cands[i], refs[i]),
                           oracle::meteor(cands[i], refs[i]), cider_ref[i]};
    for (int m = 0; m < 4; ++m) {
      worst[m] = std::max(worst[m], std::abs(lib[m] - ref[m]));
      nonzero[m] += ref[m] > 0 ? 1 : 0;
    }
  }
  const bool pass = std::all_of(std::begin(worst), std::end(worst), [](double d) { return d <= 1e-6; });
  return {pass, fmt("25 pairs, max |delta| bleu4 %.1e, rouge_l %.1e, meteor %.1e, cider %.1e "
                    "(nonzero scores: %zu/%zu/%zu/%zu)",
                    worst[0], worst[1], worst[2], worst[3], nonzero[0], nonzero[1], nonzero[2], nonzero[3])};
}

// 5 -------------------------------------------------------------------------
Outcome anchor_boundaries() {
  using region::AnchorLabel;
  const std::pair<float, AnchorLabel> cases[] = {
      {0.0f, AnchorLabel::Negative},     {0.29f, AnchorLabel::Negative}, {0.30f, AnchorLabel::NotNegative},
      {0.45f, AnchorLabel::NotNegative}, {0.50f, AnchorLabel::Positive}, {0.69f, AnchorLabel::Positive},
      {0.70f, AnchorLabel::Positive},    {0.71f, AnchorLabel::Positive}, {1.0f, AnchorLabel::Positive}};
  std::string detail;
  bool pass = true;
  for (const auto& [v, expect] : cases) {
    const auto got = region::objectiveness_label(v);
    pass = pass && got == expect;
    detail += fmt("%s%.2f->%s", detail.empty() ? "" : " ", double(v), region::to_string(got));
  }
  const std::string header = slurp(kSourceDir + "/include/mmfeed/region/region.hpp");
  const bool documented = header.find("0.7 is labelled Positive") != std::string::npos &&
                          header.find("first matching rule wins") != std::string::npos;
  pass = pass && documented;
  return {pass, detail + (documented ? "; rule-order note present in header" : "; rule-order note MISSING")};
}

// 6 -------------------------------------------------------------------------
Outcome rpn_hand_case() {
  const std::vector<float> p{1.f, 0.5f};
  const std::vector<std::uint8_t> p_star{1, 0};
  const std::vector<region::BoxDelta> t{{0.2f, -0.1f, 0.3f, 0.05f}, {0.4f, 0.4f, 0.4f, 0.4f}};
  const std::vector<region::BoxDelta> t_star{{0.2f, -0.1f, 0.3f, 0.05f}, {0.f, 0.f, 0.f, 0.f}};
  const double loss = region::rpn_loss(p, p_star, t, t_star, {10.0, 2, 1});
  const double expect = std::log(2.0) / 2.0;
  return {std::abs(loss - expect) <= 1e-6, fmt("loss %.9f, ln2/2 = %.9f, |delta| %.1e", loss, expect,
                                                std::abs(loss - expect))};
}

// 7 -------------------------------------------------------------------------
Outcome ranking_metrics() {
  // Articles whose comments embed as basis vectors; the feedback of article
  // i copies the vector of the comment with like-rank target[i].
  auto build = [](const std::vector<std::size_t>& targets) {
    std::map<std::string, eval::Embedding> table;
    std::vector<data::Sample> samples;
    std::map<std::string, std::string> feedback;
    const std::size_t n = 10;
    for (std::size_t a = 0; a < targets.size(); ++a) {
      data::Sample s;
      s.id = "art" + std::to_string(a);
      s.text = "x";
      for (std::size_t c = 0; c < n; ++c) {
        // input order deliberately differs from like order
        const std::size_t like_rank = (c * 3 + a) % n + 1;
        const std::string text = s.id + "-c" + std::to_string(c);
        s.comments.push_back({text, std::int64_t(100 - like_rank * 7)});
        eval::Embedding v(n, 0.f);
        v[c] = 1.f;
        table[text] = v;
        if (like_rank == targets[a]) {
          eval::Embedding f = v;
          f[(c + 1) % n] = 0.3f;
          table[s.id + "-feedback"] = f;
        }
      }
      feedback[s.id] = s.id + "-feedback";
      samples.push_back(s);
    }
    return std::tuple(samples, testing_support::table_provider(table), feedback);
  };

  struct Case {
    std::vector<std::size_t> ranks;
    double mrr;
    double recall[4];
  };
  const Case cases[] = {
      {{1, 2, 4}, (1 + 0.5 + 0.25) / 3, {100.0 / 3, 200.0 / 3, 100, 100}},
      {{1, 5, 9}, (1 + 0.2 + 1.0 / 9) / 3, {100.0 / 3, 100.0 / 3, 200.0 / 3, 200.0 / 3}},
      {{3, 7, 8, 2}, (1.0 / 3 + 1.0 / 7 + 1.0 / 8 + 0.5) / 4, {0, 50, 50, 75}},
  };
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    auto [samples, provider, feedback] = build(c.ranks);
    const auto fb = feedback;
    const auto suite = eval::evaluate_suite(samples, [&](const data::Sample& s) { return fb.at(s.id); }, provider);
    std::vector<std::size_t> got;
    for (const auto& a : suite.articles) got.push_back(a.rank.rank);
    const auto& r = suite.report;
    bool ok = got == c.ranks && std::abs(r.mrr - c.mrr) <= 1e-9;
    const std::size_t ks[] = {1, 3, 5, 7};
    for (int i = 0; i < 4; ++i) ok = ok && std::abs(r.recall_at.at(ks[i]) - c.recall[i]) <= 1e-9;
    pass = pass && ok;
    std::string rs;
    for (auto k : got) rs += (rs.empty() ? "" : ",") + std::to_string(k);
    detail += fmt("%sranks [%s] mrr %.5f R@1/3/5/7 %.2f/%.2f/%.2f/%.2f", detail.empty() ? "" : "; ", rs.c_str(),
                  r.mrr, r.recall_at.at(1), r.recall_at.at(3), r.recall_at.at(5), r.recall_at.at(7));
  }
  return {pass, detail};
}

// 8 -------------------------------------------------------------------------
Outcome data_fidelity() {
  const auto dir = scratch("prep");
  const auto out = dir / "legacy.jsonl";
  const int code = run_cli("prep-data --in '" + kFixtures + "/legacy.csv' --out '" + out.string() + "'", dir / "log.txt");
  if (code != 0) return {false, fmt("prep-data exited with %d", code)};
  const auto samples = data::parse_records_file(out);
  const auto st = data::corpus_stats(samples);
  // Hand counts over the three valid rows: likes 3+1+7+10+0+2 = 23 over 6
  // comments, body words 9+5+4 = 18, comment words 1+1+1+3+4+1 = 11.
  const bool stats_ok = st.n_articles == 3 && st.n_samples == 6 && std::abs(st.avg_comments_per_article - 2.0) < 1e-12 &&
                        std::abs(st.avg_likes_per_comment - 23.0 / 6) < 1e-12 &&
                        std::abs(st.avg_text_len_words - 6.0) < 1e-12 &&
                        std::abs(st.avg_comment_len_words - 11.0 / 6) < 1e-12;
  const bool contraction = samples.size() == 3 && samples[0].text.find("do not worry") != std::string::npos &&
                           samples[2].comments[1].text == "i cannot believe it" &&
                           data::normalize_text("don't") == "do not";
  bool html = data::normalize_text("<b>Hello</b> world") == "hello world";
  for (const auto& s : samples) html = html && s.title.find('<') == std::string::npos && s.text.find('<') == std::string::npos;
  html = html && samples.size() == 3 && samples[0].title == "mayor opens bridge";

  bool pass = stats_ok && contraction && html;
  std::string detail = fmt("fixture: %zu articles, %zu samples, %.2f comments/article, %.4f likes, %.2f text words, "
                           "%.4f comment words; contractions %s, html %s",
                           st.n_articles, st.n_samples, st.avg_comments_per_article, st.avg_likes_per_comment,
                           st.avg_text_len_words, st.avg_comment_len_words, contraction ? "ok" : "WRONG",
                           html ? "ok" : "WRONG");

  const char* real = std::getenv("MMFEED_REAL_CORPUS");
  if (real == nullptr || *real == '\0') {
    detail += "; real corpus not supplied (set MMFEED_REAL_CORPUS to a records file to compare)";
  } else {
    const auto rs = data::corpus_stats(data::parse_records_file(real));
    const bool real_ok = rs.n_articles == 9479 && rs.n_samples == 77790 &&
                         std::abs(rs.avg_comments_per_article - 8.21) <= 0.005 &&
                         std::abs(rs.avg_likes_per_comment - 1.51) <= 0.005 &&
                         std::abs(rs.avg_text_len_words - 611) <= 0.5 &&
                         std::abs(rs.avg_comment_len_words - 15.71) <= 0.005;
    pass = pass && real_ok;
    detail += fmt("; real corpus: %zu / %zu / %.2f / %.2f / %.0f / %.2f %s", rs.n_articles, rs.n_samples,
                  rs.avg_comments_per_article, rs.avg_likes_per_comment, rs.avg_text_len_words,
                  rs.avg_comment_len_words, real_ok ? "match" : "MISMATCH");
  }
  return {pass, detail};
}

// 9 -------------------------------------------------------------------------
Outcome determinism() {
  const auto dir = scratch("determinism");
  std::vector<std::string> ckpts, reports;
  for (const char* tag : {"a", "b"}) {
    const fs::path run_dir = dir / tag;
    nlohmann::ordered_json cfg{{"corpus", kFixtures + "/overfit.jsonl"},
                               {"regions", kFixtures + "/overfit_regions.jsonl"},
                               {"output_dir", run_dir.string()},
                               {"seed", 11},
                               {"ablation", "TVAR"},
                               {"split_mode", "holdout80_20"},
                               {"model",
                                {{"d_model", 16},
                                 {"n_heads", 2},
                                 {"n_layers_enc", 2},
                                 {"n_layers_dec", 2},
                                 {"d_ffn_hidden", 32},
                                 {"dropout", 0.1},
                                 {"max_text_len", 64},
                                 {"max_gen_len", 12}}},
                               {"train", {{"batch_size", 2}, {"epochs", 8}, {"val_fraction", 0.2}}}};
    fs::create_directories(run_dir);
    std::ofstream(dir / (std::string(tag) + ".json")) << cfg.dump(2);
    const auto log = dir / (std::string(tag) + ".log");
    if (int c = run_cli("train --config '" + (dir / (std::string(tag) + ".json")).string() + "'", log); c != 0) {
      return {false, fmt("train run %s exited with %d", tag, c)};
    }
    const auto report = run_dir / "report.csv";
    if (int c = run_cli("evaluate --ckpt '" + (run_dir / "best.ckpt.json").string() + "' --in '" +
                            (run_dir / "test.jsonl").string() + "' --regions '" + kFixtures +
                            "/overfit_regions.jsonl' --report '" + report.string() + "'",
                        log);
        c != 0) {
      return {false, fmt("evaluate run %s exited with %d", tag, c)};
    }
    ckpts.push_back(slurp(run_dir / "best.ckpt.json") + slurp(run_dir / "last.ckpt.json"));
    reports.push_back(slurp(report));
  }
  const bool same_ckpt = ckpts[0] == ckpts[1] && !ckpts[0].empty();
  const bool same_report = reports[0] == reports[1] && !reports[0].empty();
  return {same_ckpt && same_report,
          fmt("checkpoints %s (%zu bytes), reports %s", same_ckpt ? "identical" : "DIFFER", ckpts[0].size(),
              same_report ? "identical" : "DIFFER")};
}

// 10 ------------------------------------------------------------------------
Outcome ablation_contract() {
  const testing_support::OverfitFixture fx(kFixtures);
  std::vector<std::set<std::string>> names;
  std::string detail;
  for (auto a : {model::Ablation::T, model::Ablation::TV, model::Ablation::TVA, model::Ablation::TVAR}) {
    auto req = fx.request(1, 3, a);
    if (a == model::Ablation::T) req.regions = nullptr;
    try {
      const auto result = train::train(req);
      if (result.diverged || result.log.epochs.size() != 1) return {false, std::string(model::to_string(a)) + " did not finish"};
      const auto n = result.last.params.names();
      names.emplace_back(n.begin(), n.end());
      detail += fmt("%s%s: %zu tensors, loss %.3f", detail.empty() ? "" : "; ", model::to_string(a), n.size(),
                    result.log.epochs[0].train_loss);
    } catch (const std::exception& e) {
      return {false, std::string(model::to_string(a)) + " failed: " + e.what()};
    }
  }
  bool nested = true;
  for (std::size_t i = 1; i < names.size(); ++i) {
    nested = nested && names[i - 1].size() < names[i].size() &&
             std::includes(names[i].begin(), names[i].end(), names[i - 1].begin(), names[i - 1].end());
  }
  return {nested, detail + (nested ? "; T < TV < TVA < TVAR strictly nested" : "; NOT strictly nested")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"attention normalization", attention_normalization},
      {"overfit reproduction", overfit_reproduction},
      {"metric oracle equivalence", metric_oracles},
      {"anchor label boundaries", anchor_boundaries},
      {"region proposal loss hand case", rpn_hand_case},
      {"ranking metrics", ranking_metrics},
      {"data fidelity", data_fidelity},
      {"determinism", determinism},
      {"ablation contract", ablation_contract},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::strtoul(argv[i], nullptr, 10));

  std::printf("kernels: %s\n", kernels::active().name);
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%-4s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
