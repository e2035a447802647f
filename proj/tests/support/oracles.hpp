// SPDX-License-Identifier: Apache-2.0
// Brute-force reference implementations of the text metrics. They share no
// code with the library beyond the suffix stemmer, and favour obviousness
// over speed: plain vectors, linear scans, exhaustive search.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mmfeed/eval/metrics.hpp"

namespace oracle {

using Sentence = std::vector<std::string>;
using Gram = std::vector<std::string>;

inline std::vector<Gram> grams_of(const Sentence& s, std::size_t n) {
  std::vector<Gram> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out.emplace_back(s.begin() + i, s.begin() + i + n);
  return out;
}

inline std::size_t occurrences(const std::vector<Gram>& list, const Gram& g) {
  std::size_t c = 0;
  for (const auto& x : list) c += x == g ? 1 : 0;
  return c;
}

inline std::vector<Gram> distinct(const std::vector<Gram>& list) {
  std::vector<Gram> out;
  for (const auto& g : list) {
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  return out;
}

struct BleuCounts {
  double match[4] = {0, 0, 0, 0};
  double total[4] = {0, 0, 0, 0};
  double c = 0, r = 0;
};

inline BleuCounts bleu_counts(const Sentence& cand, const std::vector<Sentence>& refs) {
  BleuCounts k;
  k.c = double(cand.size());
  std::size_t best = refs[0].size();
  for (const auto& r : refs) {
    const long d_new = std::labs(long(r.size()) - long(cand.size()));
    const long d_old = std::labs(long(best) - long(cand.size()));
    if (d_new < d_old || (d_new == d_old && r.size() < best)) best = r.size();
  }
  k.r = double(best);
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cg = grams_of(cand, n);
    k.total[n - 1] = double(cg.size());
    for (const auto& g : distinct(cg)) {
      std::size_t max_ref = 0;
      for (const auto& r : refs) max_ref = std::max(max_ref, occurrences(grams_of(r, n), g));
      k.match[n - 1] += double(std::min(occurrences(cg, g), max_ref));
    }
  }
  return k;
}

inline double bleu_combine(const BleuCounts& k) {
  if (k.c == 0 || k.match[0] == 0) return 0.0;
  double product = 1.0;
  for (int n = 0; n < 4; ++n) {
    double p = k.match[n] / k.total[n];
    if (n > 0 && k.match[n] == 0) p = 1.0 / (k.total[n] + 1.0);
    product *= p;
  }
  const double bp = k.c > k.r ? 1.0 : std::exp(1.0 - k.r / k.c);
  return bp * std::pow(product, 0.25);
}

inline double bleu(const Sentence& cand, const std::vector<Sentence>& refs) {
  return bleu_combine(bleu_counts(cand, refs));
}

// Longest common subsequence by trying every subset of candidate positions.
inline std::size_t lcs(const Sentence& a, const Sentence& b) {
  std::size_t best = 0;
  const std::size_t n = a.size();
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    std::size_t j = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1ul)) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else {
        ++j;
        ++len;
      }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

inline double rouge_l(const Sentence& cand, const std::vector<Sentence>& refs) {
  double best = 0;
  for (const auto& r : refs) {
    const double l = double(lcs(cand, r));
    if (l == 0) continue;
    const double p = l / double(cand.size()), rec = l / double(r.size());
    best = std::max(best, 2 * p * rec / (p + rec));
  }
  return best;
}

// Every injective partial matching, scored by (exact, matches, -chunks).
inline double meteor_one(const Sentence& cand, const Sentence& ref) {
  std::vector<int> assign(cand.size(), -1);
  std::vector<bool> taken(ref.size(), false);
  long best_exact = -1, best_m = -1, best_chunks = 0;
  auto visit = [&](auto&& self, std::size_t i) -> void {
    if (i == cand.size()) {
      long m = 0, exact = 0, chunks = 0;
      for (std::size_t k = 0; k < cand.size(); ++k) {
        if (assign[k] < 0) continue;
        ++m;
        if (cand[k] == ref[std::size_t(assign[k])]) ++exact;
        const bool continues = k > 0 && assign[k - 1] >= 0 && assign[k - 1] + 1 == assign[k];
        if (!continues) ++chunks;
      }
      const bool better = exact > best_exact || (exact == best_exact && m > best_m) ||
                          (exact == best_exact && m == best_m && chunks < best_chunks);
      if (better) {
        best_exact = exact;
        best_m = m;
        best_chunks = chunks;
      }
      return;
    }
    self(self, i + 1);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (taken[j]) continue;
      if (cand[i] != ref[j] && mmfeed::eval::stem(cand[i]) != mmfeed::eval::stem(ref[j])) continue;
      taken[j] = true;
      assign[i] = int(j);
      self(self, i + 1);
      taken[j] = false;
      assign[i] = -1;
    }
  };
  visit(visit, 0);
  if (best_m <= 0) return 0.0;
  const double p = double(best_m) / double(cand.size());
  const double r = double(best_m) / double(ref.size());
  const double f = (p * r) / (0.9 * p + 0.1 * r);
  const double pen = 0.5 * std::pow(double(best_chunks) / double(best_m), 3.0);
  return f * (1.0 - pen);
}

inline double meteor(const Sentence& cand, const std::vector<Sentence>& refs) {
  double best = 0;
  for (const auto& r : refs) best = std::max(best, meteor_one(cand, r));
  return best;
}

// Plain CIDEr per document, from lists of (gram, weight) pairs.
inline std::vector<double> cider(const std::vector<Sentence>& cands, const std::vector<std::vector<Sentence>>& refs) {
  const double n_docs = double(cands.size());
  auto doc_freq = [&](const Gram& g, std::size_t n) {
    double df = 0;
    for (const auto& doc : refs) {
      bool present = false;
      for (const auto& r : doc) present = present || occurrences(grams_of(r, n), g) > 0;
      df += present ? 1 : 0;
    }
    return df;
  };
  auto weights = [&](const Sentence& s, std::size_t n) {
    std::vector<std::pair<Gram, double>> w;
    const auto all = grams_of(s, n);
    for (const auto& g : distinct(all)) {
      w.emplace_back(g, double(occurrences(all, g)) * (std::log(n_docs) - std::log(std::max(1.0, doc_freq(g, n)))));
    }
    return w;
  };
  auto cosine = [](const std::vector<std::pair<Gram, double>>& a, const std::vector<std::pair<Gram, double>>& b) {
    double dot = 0, na = 0, nb = 0;
    for (const auto& [g, x] : a) {
      na += x * x;
      for (const auto& [h, y] : b) dot += g == h ? x * y : 0.0;
    }
    for (const auto& [h, y] : b) nb += y * y;
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };
  std::vector<double> out;
  for (std::size_t d = 0; d < cands.size(); ++d) {
    double acc = 0;
    for (const auto& r : refs[d]) {
      double per_ref = 0;
      for (std::size_t n = 1; n <= 4; ++n) per_ref += cosine(weights(cands[d], n), weights(r, n));
      acc += per_ref / 4.0;
    }
    out.push_back(10.0 * acc / double(refs[d].size()));
  }
  return out;
}

}  // namespace oracle
