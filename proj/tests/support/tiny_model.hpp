// SPDX-License-Identifier: Apache-2.0
// Small model instances and a finite-difference gradient check shared by the
// unit tests and the acceptance runner.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mmfeed/model/model.hpp"
#include "mmfeed/train/train.hpp"

namespace testing_support {

inline mmfeed::model::ModelConfig tiny_config(mmfeed::model::Ablation ablation = mmfeed::model::Ablation::TVAR,
                                              std::size_t d_model = 8, std::size_t vocab = 16) {
  mmfeed::model::ModelConfig c;
  c.d_model = d_model;
  c.n_heads = 2;
  c.n_layers_enc = 2;
  c.n_layers_dec = 2;
  c.d_ffn_hidden = 2 * d_model;
  c.d_visual = 4;
  c.dropout = 0.f;
  c.vocab_size = vocab;
  c.max_text_len = 32;
  c.max_gen_len = 8;
  c.ablation = ablation;
  return c;
}

inline mmfeed::region::RegionFeatureSet random_regions(std::mt19937_64& rng, std::size_t n, std::size_t d_visual,
                                                       const std::string& ref = "img") {
  std::uniform_real_distribution<float> u(-1.f, 1.f), pos(0.f, 50.f), ext(1.f, 40.f);
  mmfeed::region::RegionFeatureSet r;
  r.image_ref = ref;
  r.features = mmfeed::Tensor({n, d_visual});
  for (auto& x : r.features.data()) x = u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const float x1 = pos(rng), y1 = pos(rng);
    r.boxes.push_back({x1, y1, x1 + ext(rng), y1 + ext(rng)});
  }
  return r;
}

inline mmfeed::TokenIds random_ids(std::mt19937_64& rng, std::size_t n, std::size_t vocab) {
  mmfeed::TokenIds ids(n);
  for (auto& id : ids) id = mmfeed::TokenId(4 + rng() % (vocab - 4));
  return ids;
}

// BOS + content + EOS
inline mmfeed::TokenIds framed(mmfeed::TokenIds content) {
  content.insert(content.begin(), mmfeed::kBosId);
  content.push_back(mmfeed::kEosId);
  return content;
}

struct GradCheck {
  // ‖a − n‖ / max(‖a‖, ‖n‖) per tensor, with kink elements re-differenced
  std::map<std::string, double> relative_error;
  // the same with the plain central difference at h everywhere
  std::map<std::string, double> strict_relative_error;
  std::string worst_name;
  double worst = 0;
  double strict_worst = 0;
  std::size_t kink_elements = 0;
  std::size_t evaluations = 0;
};

// Analytic gradients of the float model against central differences of the
// same loss evaluated on a double-precision copy of the parameters.
//
// Central differences are meaningless where the ±h interval straddles a ReLU
// kink. Such elements show up as a disagreement between the differences at h
// and h/10; for them the numeric value is taken at h = 1e-6 instead, and the
// count is reported.
inline GradCheck gradient_check(const mmfeed::model::ModelConfig& config, const mmfeed::ParameterStore& store,
                                std::span<const mmfeed::train::Example> batch, double h = 1e-3) {
  using namespace mmfeed;
  Graph<float> graph;
  const auto f = model::bind(graph, config, store, true);
  graph.backward(train::batch_loss(f, batch));
  const auto analytic = graph.parameter_gradients();

  auto params = store.cast<double>();
  GradCheck out;
  auto loss_at = [&]() {
    Graph<double> g;
    const auto fd = model::bind(g, config, params, false);
    ++out.evaluations;
    return train::batch_loss(fd, batch).value()[0];
  };
  auto central = [&](double& x, double step) {
    const double saved = x;
    x = saved + step;
    const double up = loss_at();
    x = saved - step;
    const double down = loss_at();
    x = saved;
    return (up - down) / (2 * step);
  };
  auto relative = [](double diff2, double a2, double n2) {
    const double scale = std::sqrt(std::max(a2, n2));
    return scale < 1e-12 ? 0.0 : std::sqrt(diff2) / scale;
  };

  for (auto& [name, tensor] : params) {
    const Tensor& a = analytic.at(name);
    double diff2 = 0, n2 = 0, strict_diff2 = 0, strict_n2 = 0, a2 = 0;
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double coarse = central(tensor[i], h);
      const double fine = central(tensor[i], h / 10);
      double numeric = coarse;
      if (std::abs(coarse - fine) > 1e-3 * std::max(std::abs(fine), 1e-4)) {
        numeric = central(tensor[i], 1e-6);
        ++out.kink_elements;
      }
      const double ai = a[i];
      a2 += ai * ai;
      strict_diff2 += (ai - coarse) * (ai - coarse);
      strict_n2 += coarse * coarse;
      diff2 += (ai - numeric) * (ai - numeric);
      n2 += numeric * numeric;
    }
    const double rel = relative(diff2, a2, n2);
    const double strict = relative(strict_diff2, a2, strict_n2);
    out.relative_error[name] = rel;
    out.strict_relative_error[name] = strict;
    out.strict_worst = std::max(out.strict_worst, strict);
    if (rel >= out.worst) {
      out.worst = rel;
      out.worst_name = name;
    }
  }
  return out;
}

}  // namespace testing_support
