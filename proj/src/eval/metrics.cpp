// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "mmfeed/error.hpp"

namespace mmfeed::eval {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + i, t.begin() + i + n)];
  return out;
}

void require_refs(const References& refs, const char* metric) {
  if (refs.empty()) throw Error(std::string(metric) + ": no references");
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < 4; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  candidate_length += o.candidate_length;
  reference_length += o.reference_length;
  return *this;
}

BleuStats bleu_stats(const Tokens& candidate, const References& references) {
  require_refs(references, "bleu4");
  BleuStats st;
  st.candidate_length = candidate.size();
  std::size_t best = references[0].size();
  for (const Tokens& r : references) {
    const auto d = [&](std::size_t len) { return len > candidate.size() ? len - candidate.size() : candidate.size() - len; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  st.reference_length = best;
  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounts cand = ngrams(candidate, n);
    NgramCounts max_ref;
    for (const Tokens& r : references) {
      for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    for (const auto& [g, c] : cand) {
      st.totals[n - 1] += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) st.matches[n - 1] += std::min(c, it->second);
    }
  }
  return st;
}

double bleu_from_stats(const BleuStats& st) {
  if (st.candidate_length == 0 || st.matches[0] == 0) return 0.0;
  double log_sum = 0;
  for (int n = 0; n < 4; ++n) {
    const double p = (n > 0 && st.matches[n] == 0) ? 1.0 / double(st.totals[n] + 1)
                                                   : double(st.matches[n]) / double(st.totals[n]);
    log_sum += std::log(p);
  }
  const double c = double(st.candidate_length), r = double(st.reference_length);
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / 4.0);
}

double bleu4(const Tokens& candidate, const References& references) {
  if (candidate.empty()) throw Error("bleu4: empty candidate");
  return bleu_from_stats(bleu_stats(candidate, references));
}

double corpus_bleu4(std::span<const Tokens> candidates, std::span<const References> references) {
  if (candidates.size() != references.size()) throw DimensionError("corpus_bleu4: candidate/reference count differs");
  if (candidates.empty()) throw Error("corpus_bleu4: empty corpus");
  BleuStats total;
  for (std::size_t i = 0; i < candidates.size(); ++i) total += bleu_stats(candidates[i], references[i]);
  return bleu_from_stats(total);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Tokens& candidate, const References& references) {
  require_refs(references, "rouge_l");
  double best = 0;
  for (const Tokens& r : references) {
    const std::size_t l = lcs_length(candidate, r);
    if (l == 0) continue;
    const double p = double(l) / double(candidate.size());
    const double rec = double(l) / double(r.size());
    best = std::max(best, 2 * p * rec / (p + rec));
  }
  return best;
}

std::string stem(const std::string& w) {
  auto ends = [&](std::string_view suf) { return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0; };
  auto strip = [&](std::size_t k, std::string_view add = {}) {
    std::string s = w.substr(0, w.size() - k);
    s += add;
    return s;
  };
  if (w.size() > 4 && ends("ies")) return strip(3, "y");
  if (w.size() > 4 && ends("sses")) return strip(2);
  // "running" -> "run", "stopped" -> "stop", but "falling" -> "fall"
  auto undouble = [](std::string s) {
    const std::size_t n = s.size();
    if (n >= 3 && s[n - 1] == s[n - 2] && std::string_view("aeioulsz").find(s[n - 1]) == std::string_view::npos) {
      s.pop_back();
    }
    return s;
  };
  if (w.size() > 5 && ends("ing")) return undouble(strip(3));
  if (w.size() > 4 && ends("ed")) return undouble(strip(2));
  if (w.size() > 4 && ends("ly")) return strip(2);
  if (w.size() > 4 && ends("es")) return strip(2);
  if (w.size() > 3 && ends("s") && !ends("ss")) return strip(1);
  return w;
}

namespace {

struct AlignSearch {
  const Tokens& cand;
  const Tokens& ref;
  std::vector<std::string> cand_stem, ref_stem;
  std::vector<int> assign;  // candidate position -> reference position or -1
  std::vector<bool> used;
  MeteorAlignment best;
  bool have_best = false;
  std::size_t budget = 200000;

  static bool better(const MeteorAlignment& a, const MeteorAlignment& b) {
    if (a.exact != b.exact) return a.exact > b.exact;
    if (a.matches != b.matches) return a.matches > b.matches;
    return a.chunks < b.chunks;
  }

  MeteorAlignment evaluate() const {
    MeteorAlignment a;
    int prev_c = -2, prev_r = -2;
    for (std::size_t i = 0; i < assign.size(); ++i) {
      if (assign[i] < 0) continue;
      ++a.matches;
      if (cand[i] == ref[static_cast<std::size_t>(assign[i])]) ++a.exact;
      if (!(int(i) == prev_c + 1 && assign[i] == prev_r + 1)) ++a.chunks;
      prev_c = int(i);
      prev_r = assign[i];
    }
    return a;
  }

  void dfs(std::size_t i) {
    if (budget == 0) return;
    --budget;
    if (i == cand.size()) {
      const MeteorAlignment a = evaluate();
      if (!have_best || better(a, best)) {
        best = a;
        have_best = true;
      }
      return;
    }
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (used[j]) continue;
      if (cand[i] != ref[j] && cand_stem[i] != ref_stem[j]) continue;
      used[j] = true;
      assign[i] = int(j);
      dfs(i + 1);
      used[j] = false;
      assign[i] = -1;
    }
    dfs(i + 1);
  }

  // Left-to-right: exact matches first, then stems, nearest free position.
  MeteorAlignment greedy() {
    std::fill(assign.begin(), assign.end(), -1);
    std::fill(used.begin(), used.end(), false);
    for (int stage = 0; stage < 2; ++stage) {
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (assign[i] >= 0) continue;
        for (std::size_t j = 0; j < ref.size(); ++j) {
          const bool ok = stage == 0 ? cand[i] == ref[j] : cand_stem[i] == ref_stem[j];
          if (!used[j] && ok) {
            used[j] = true;
            assign[i] = int(j);
            break;
          }
        }
      }
    }
    return evaluate();
  }
};

}  // namespace

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference) {
  AlignSearch s{candidate, reference, {}, {}, std::vector<int>(candidate.size(), -1),
                std::vector<bool>(reference.size(), false), {}, false};
  for (const auto& w : candidate) s.cand_stem.push_back(stem(w));
  for (const auto& w : reference) s.ref_stem.push_back(stem(w));
  s.dfs(0);
  const MeteorAlignment g = s.greedy();
  if (!s.have_best || AlignSearch::better(g, s.best)) return g;
  return s.best;
}

double meteor_score(const MeteorAlignment& a, std::size_t candidate_length, std::size_t reference_length) {
  if (a.matches == 0) return 0.0;
  const double p = double(a.matches) / double(candidate_length);
  const double r = double(a.matches) / double(reference_length);
  const double fmean = 10 * p * r / (r + 9 * p);
  const double frag = double(a.chunks) / double(a.matches);
  return fmean * (1 - 0.5 * frag * frag * frag);
}

double meteor(const Tokens& candidate, const References& references) {
  require_refs(references, "meteor");
  double best = 0;
  for (const Tokens& r : references) {
    best = std::max(best, meteor_score(meteor_align(candidate, r), candidate.size(), r.size()));
  }
  return best;
}

namespace {

struct TfIdf {
  std::array<std::map<Tokens, double>, 4> vec;
  std::array<double, 4> norm{};
};

TfIdf tfidf(const Tokens& t, const std::array<std::map<Tokens, std::size_t>, 4>& df, double log_n) {
  TfIdf out;
  for (std::size_t n = 1; n <= 4; ++n) {
    double sq = 0;
    for (const auto& [g, tf] : ngrams(t, n)) {
      auto it = df.at(n - 1).find(g);
      const double d = it == df.at(n - 1).end() ? 1.0 : double(std::max<std::size_t>(1, it->second));
      const double w = double(tf) * (log_n - std::log(d));
      out.vec[n - 1][g] = w;
      sq += w * w;
    }
    out.norm[n - 1] = std::sqrt(sq);
  }
  return out;
}

}  // namespace

std::vector<double> cider_scores(std::span<const Tokens> candidates, std::span<const References> references) {
  if (candidates.size() != references.size()) throw DimensionError("cider: candidate/reference count differs");
  if (candidates.empty()) throw Error("cider: empty corpus");
  std::array<std::map<Tokens, std::size_t>, 4> df;
  for (const References& refs : references) {
    require_refs(refs, "cider");
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<Tokens, bool> seen;
      for (const Tokens& r : refs) {
        for (const auto& [g, c] : ngrams(r, n)) seen[g] = true;
      }
      for (const auto& [g, b] : seen) ++df[n - 1][g];
    }
  }
  const double log_n = std::log(double(candidates.size()));

  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const TfIdf c = tfidf(candidates[i], df, log_n);
    double total = 0;
    for (const Tokens& r : references[i]) {
      const TfIdf rv = tfidf(r, df, log_n);
      for (int n = 0; n < 4; ++n) {
        if (c.norm[n] == 0 || rv.norm[n] == 0) continue;
        double dotp = 0;
        for (const auto& [g, w] : c.vec[n]) {
          auto it = rv.vec[n].find(g);
          if (it != rv.vec[n].end()) dotp += w * it->second;
        }
        total += dotp / (c.norm[n] * rv.norm[n]);
      }
    }
    scores.push_back(10.0 * total / 4.0 / double(references[i].size()));
  }
  return scores;
}

double cider(std::span<const Tokens> candidates, std::span<const References> references) {
  const auto s = cider_scores(candidates, references);
  double sum = 0;
  for (double v : s) sum += v;
  return sum / double(s.size());
}

}  // namespace mmfeed::eval
