// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/model/model.hpp"

#include <algorithm>
#include <cmath>

#include "mmfeed/error.hpp"

namespace mmfeed::model {

const char* to_string(AttentionKind kind) {
  switch (kind) {
    case AttentionKind::EncoderSelf: return "encoder-self";
    case AttentionKind::DecoderSelf: return "decoder-self";
    case AttentionKind::Cross: return "cross";
    case AttentionKind::Multimodal: return "multimodal";
    case AttentionKind::Visual: return "visual";
  }
  return "?";
}

template <class T>
Var<T> Forward<T>::p(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw Error("model parameter " + name + " is not bound");
  return it->second;
}

template <class T>
Forward<T> bind(Graph<T>& graph, const ModelConfig& config, const std::map<std::string, BasicTensor<T>>& params,
                bool trainable) {
  Forward<T> f;
  f.graph = &graph;
  f.config = config;
  for (const auto& [name, value] : params) {
    f.params.emplace(name, trainable ? graph.parameter(name, value) : graph.constant(value));
  }
  return f;
}

Forward<float> bind(Graph<float>& graph, const ModelConfig& config, const ParameterStore& store, bool trainable) {
  return bind<float>(graph, config, store.entries(), trainable);
}

namespace {

void report(const AttentionProbe* probe, AttentionKind kind, const auto& weights,
            const std::vector<std::uint8_t>* allowed) {
  if (probe == nullptr || !*probe) return;
  AttentionRecord rec;
  rec.kind = kind;
  rec.rows = weights.rows();
  rec.cols = weights.cols();
  rec.weights.assign(weights.data().begin(), weights.data().end());
  if (allowed != nullptr) rec.allowed = *allowed;
  (*probe)(rec);
}

template <class T>
Var<T> maybe_dropout(const Forward<T>& f, Var<T> x) {
  if (f.dropout_rng == nullptr || f.config.dropout <= 0.0f) return x;
  return dropout(x, T(f.config.dropout), *f.dropout_rng);
}

template <class T>
AttentionWeights<T> attention_weights(const Forward<T>& f, const std::string& prefix) {
  return {f.p(prefix + ".wq"), f.p(prefix + ".wk"), f.p(prefix + ".wv"), f.p(prefix + ".wo")};
}

template <class T>
Var<T> norm(const Forward<T>& f, const std::string& prefix, Var<T> x) {
  return layer_norm(x, f.p(prefix + ".gain"), f.p(prefix + ".bias"));
}

// x + dropout(sublayer), then layer norm.
template <class T>
Var<T> residual(const Forward<T>& f, const std::string& norm_prefix, Var<T> x, Var<T> sub) {
  return norm(f, norm_prefix, add(x, maybe_dropout(f, sub)));
}

template <class T>
Var<T> ffn(const Forward<T>& f, const std::string& prefix, Var<T> x) {
  return position_wise_ffn(x, f.p(prefix + ".w1"), f.p(prefix + ".b1"), f.p(prefix + ".w2"), f.p(prefix + ".b2"));
}

template <class T>
Var<T> embed(const Forward<T>& f, std::span<const TokenId> ids) {
  const std::size_t d = f.config.d_model;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= f.config.vocab_size) {
      throw Error("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(f.config.vocab_size));
    }
  }
  Var<T> x = scale(embedding(f.p("embed.tok"), ids), static_cast<T>(std::sqrt(double(d))));
  x = add(x, f.graph->constant(positional_encoding<T>(ids.size(), d)));
  return maybe_dropout(f, x);
}

// Keys usable by every query: the non-PAD positions of the key sequence.
std::vector<std::uint8_t> key_mask(std::size_t queries, const std::vector<std::uint8_t>& keys) {
  std::vector<std::uint8_t> allowed(queries * keys.size());
  for (std::size_t i = 0; i < queries; ++i) std::copy(keys.begin(), keys.end(), allowed.begin() + i * keys.size());
  return allowed;
}

}  // namespace

template <class T>
Var<T> scaled_dot_attention(Var<T> q, Var<T> k, Var<T> v, const std::vector<std::uint8_t>* allowed,
                            const AttentionProbe* probe, AttentionKind kind) {
  const std::size_t dk = q.value().cols();
  if (k.value().cols() != dk) {
    throw DimensionError("attention: query width " + std::to_string(dk) + " vs key width " +
                         std::to_string(k.value().cols()));
  }
  if (k.value().rows() != v.value().rows()) {
    throw DimensionError("attention: " + std::to_string(k.value().rows()) + " keys but " +
                         std::to_string(v.value().rows()) + " values");
  }
  Var<T> scores = scale(matmul(q, transpose(k)), static_cast<T>(1.0 / std::sqrt(double(dk))));
  Var<T> weights = softmax_rows(scores, allowed);
  report(probe, kind, weights.value(), allowed);
  return matmul(weights, v);
}

template <class T>
Var<T> multi_head_attention(Var<T> x_q, Var<T> x_k, Var<T> x_v, const AttentionWeights<T>& w, std::size_t n_heads,
                            const std::vector<std::uint8_t>* allowed, const AttentionProbe* probe,
                            AttentionKind kind) {
  const std::size_t d = w.wq.value().cols();
  if (n_heads == 0 || d % n_heads != 0) {
    throw DimensionError("attention: width " + std::to_string(d) + " not divisible into " + std::to_string(n_heads) +
                         " heads");
  }
  const std::size_t dh = d / n_heads;
  Var<T> q = matmul(x_q, w.wq);
  Var<T> k = matmul(x_k, w.wk);
  Var<T> v = matmul(x_v, w.wv);
  std::vector<Var<T>> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    if (n_heads == 1) {
      heads.push_back(scaled_dot_attention(q, k, v, allowed, probe, kind));
    } else {
      heads.push_back(scaled_dot_attention(slice_cols(q, h * dh, dh), slice_cols(k, h * dh, dh),
                                           slice_cols(v, h * dh, dh), allowed, probe, kind));
    }
  }
  Var<T> joined = n_heads == 1 ? heads[0] : concat_cols<T>(heads);
  return matmul(joined, w.wo);
}

template <class T>
Var<T> position_wise_ffn(Var<T> x, Var<T> w1, Var<T> b1, Var<T> w2, Var<T> b2) {
  return add_bias(matmul(relu(add_bias(matmul(x, w1), b1)), w2), b2);
}

template <class T>
BasicTensor<T> positional_encoding(std::size_t rows, std::size_t d) {
  BasicTensor<T> pe({rows, d});
  for (std::size_t pos = 0; pos < rows; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      const double angle = double(pos) / std::pow(10000.0, double(2 * (i / 2)) / double(d));
      pe.at(pos, i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <class T>
EncoderOutput<T> encode_text(const Forward<T>& f, std::span<const TokenId> ids) {
  const ModelConfig& c = f.config;
  if (ids.empty()) throw Error("encode_text: empty input");
  if (ids.size() > c.max_text_len) {
    throw Error("encode_text: " + std::to_string(ids.size()) + " tokens exceed max_text_len " +
                std::to_string(c.max_text_len));
  }
  EncoderOutput<T> out;
  out.mask.resize(ids.size());
  bool any = false;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.mask[i] = ids[i] != kPadId;
    any = any || out.mask[i];
  }
  if (!any) throw Error("encode_text: input holds only PAD tokens");
  const auto allowed = key_mask(ids.size(), out.mask);

  Var<T> x = embed(f, ids);
  for (std::size_t l = 0; l < c.n_layers_enc; ++l) {
    const std::string p = "enc." + std::to_string(l);
    Var<T> a = multi_head_attention(x, x, x, attention_weights(f, p + ".self_attn"), c.n_heads, &allowed, f.probe,
                                    AttentionKind::EncoderSelf);
    x = residual(f, p + ".norm1", x, a);
    x = residual(f, p + ".norm2", x, ffn(f, p + ".ffn", x));
  }
  out.z_star = x;
  return out;
}

template <class T>
Var<T> visual_attend(Var<T> regions, Var<T> g, const AttentionProbe* probe) {
  const auto& b = regions.value();
  if (b.rank() != 2 || b.rows() < 1) throw DimensionError("visual_attend: regions must be a non-empty matrix");
  if (g.value().size() != b.cols()) {
    throw DimensionError("visual_attend: global vector " + shape_string(g.value().shape()) + " vs regions " +
                         shape_string(b.shape()));
  }
  Var<T> g_row = g.value().rank() == 2 ? g : reshape(g, {1, b.cols()});
  Var<T> scores = transpose(matmul(regions, transpose(g_row)));  // [1 × n]
  Var<T> a = softmax_rows(scores);
  report(probe, AttentionKind::Visual, a.value(), nullptr);
  return matmul(a, regions);
}

template <class T>
Var<T> visual_context(const Forward<T>& f, const region::RegionFeatureSet& rfs) {
  const ModelConfig& c = f.config;
  Graph<T>& g = *f.graph;
  region::validate(rfs);
  if (rfs.d_visual() != c.d_visual) {
    throw DimensionError("image \"" + rfs.image_ref + "\" has d_visual " + std::to_string(rfs.d_visual()) +
                         ", model expects " + std::to_string(c.d_visual));
  }
  auto as_row = [&](const std::vector<float>& v) {
    return g.constant(BasicTensor<T>({1, v.size()}, std::vector<T>(v.begin(), v.end())));
  };
  if (c.ablation == Ablation::TV) return as_row(region::global_vector(rfs));

  Var<T> regions = g.constant(rfs.features.template cast<T>());
  if (c.ablation == Ablation::TVAR) {
    float sx = 0, sy = 0;
    for (const auto& b : rfs.boxes) {
      sx = std::max(sx, b.x2);
      sy = std::max(sy, b.y2);
    }
    if (sx <= 0) sx = 1;
    if (sy <= 0) sy = 1;
    BasicTensor<T> geo({rfs.n_regions(), 4});
    for (std::size_t i = 0; i < rfs.n_regions(); ++i) {
      const auto& b = rfs.boxes[i];
      geo.at(i, 0) = T(b.x1 / sx);
      geo.at(i, 1) = T(b.y1 / sy);
      geo.at(i, 2) = T(b.x2 / sx);
      geo.at(i, 3) = T(b.y2 / sy);
    }
    regions = add(regions, matmul(g.constant(std::move(geo)), f.p("visual.box.w")));
  }
  regions = norm(f, "visual.norm", regions);
  Var<T> global = rfs.global ? norm(f, "visual.norm", as_row(*rfs.global)) : mean_rows(regions);
  return visual_attend(regions, global, f.probe);
}

template <class T>
Var<T> fuse_multimodal(Var<T> z_star, Var<T> g_star, Var<T> w, Var<T> b) {
  const auto& z = z_star.value();
  const std::size_t dv = g_star.value().size();
  if (w.value().rank() != 2 || w.value().rows() != z.cols() + dv) {
    throw DimensionError("fuse_multimodal: weight " + shape_string(w.value().shape()) + " does not fit [" +
                         std::to_string(z.cols()) + "+" + std::to_string(dv) + " × d]");
  }
  Var<T> g_row = g_star.value().rank() == 2 ? g_star : reshape(g_star, {1, dv});
  const Var<T> parts[] = {z_star, repeat_rows(g_row, z.rows())};
  return add_bias(matmul(concat_cols<T>(parts), w), b);
}

template <class T>
std::optional<Var<T>> multimodal_context(const Forward<T>& f, const EncoderOutput<T>& enc,
                                         const region::RegionFeatureSet* rfs) {
  if (!uses_visual(f.config.ablation)) return std::nullopt;
  if (rfs == nullptr) {
    throw Error(std::string("ablation ") + to_string(f.config.ablation) + " needs region features for every sample");
  }
  Var<T> g_star = visual_context(f, *rfs);
  return fuse_multimodal(enc.z_star, g_star, f.p("fusion.w"), f.p("fusion.b"));
}

template <class T>
Var<T> decode(const Forward<T>& f, std::span<const TokenId> target_in, const EncoderOutput<T>& enc,
              std::optional<Var<T>> y_star) {
  const ModelConfig& c = f.config;
  const std::size_t t = target_in.size();
  if (t == 0) throw Error("decode: empty target");
  if (uses_visual(c.ablation) && !y_star) throw Error("decode: multimodal context missing");

  std::vector<std::uint8_t> self_allowed(t * t, 0);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j <= i; ++j) self_allowed[i * t + j] = target_in[j] != kPadId;
  }
  const auto enc_allowed = key_mask(t, enc.mask);

  Var<T> x = embed(f, target_in);
  for (std::size_t l = 0; l < c.n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    Var<T> a = multi_head_attention(x, x, x, attention_weights(f, p + ".self_attn"), c.n_heads, &self_allowed,
                                    f.probe, AttentionKind::DecoderSelf);
    x = residual(f, p + ".norm1", x, a);
    a = multi_head_attention(x, enc.z_star, enc.z_star, attention_weights(f, p + ".cross_attn"), c.n_heads,
                             &enc_allowed, f.probe, AttentionKind::Cross);
    x = residual(f, p + ".norm2", x, a);
    if (y_star) {
      a = multi_head_attention(x, *y_star, *y_star, attention_weights(f, p + ".mm_attn"), c.n_heads, &enc_allowed,
                               f.probe, AttentionKind::Multimodal);
      x = residual(f, p + ".norm3", x, a);
    }
    x = residual(f, p + ".norm4", x, ffn(f, p + ".ffn", x));
  }
  return add_bias(matmul(x, f.p("out.w")), f.p("out.b"));
}

template <class T>
Var<T> sequence_loss(const Forward<T>& f, std::span<const TokenId> article, std::span<const TokenId> comment,
                     const region::RegionFeatureSet* rfs) {
  if (comment.size() < 2) throw Error("sequence_loss: comment needs at least BOS and EOS");
  const EncoderOutput<T> enc = encode_text(f, article);
  const auto y_star = multimodal_context(f, enc, rfs);
  Var<T> logits = decode(f, comment.first(comment.size() - 1), enc, y_star);
  return cross_entropy(logits, comment.subspan(1), kPadId);
}

TokenIds generate_greedy(const ParameterStore& store, const ModelConfig& config, std::span<const TokenId> article,
                         const region::RegionFeatureSet* rfs) {
  Graph<float> graph;
  const Forward<float> f = bind(graph, config, store, false);
  const EncoderOutput<float> enc = encode_text(f, article);
  const auto y_star = multimodal_context(f, enc, rfs);

  TokenIds prefix{kBosId};
  TokenIds out;
  while (out.size() < config.max_gen_len) {
    const Tensor& logits = decode(f, prefix, enc, y_star).value();
    const auto last = logits.row(logits.rows() - 1);
    const auto best = static_cast<TokenId>(std::max_element(last.begin(), last.end()) - last.begin());
    if (best == kEosId) break;
    out.push_back(best);
    prefix.push_back(best);
  }
  return out;
}

std::vector<float> mean_pooled_encoding(const ParameterStore& store, const ModelConfig& config,
                                        std::span<const TokenId> article) {
  Graph<float> graph;
  const Forward<float> f = bind(graph, config, store, false);
  const Tensor& pooled = mean_rows(encode_text(f, article).z_star).value();
  return pooled.vec();
}

#define MMFEED_INSTANTIATE_MODEL(T)                                                                               \
  template struct Forward<T>;                                                                                     \
  template Forward<T> bind(Graph<T>&, const ModelConfig&, const std::map<std::string, BasicTensor<T>>&, bool);    \
  template Var<T> scaled_dot_attention(Var<T>, Var<T>, Var<T>, const std::vector<std::uint8_t>*,                  \
                                       const AttentionProbe*, AttentionKind);                                     \
  template Var<T> multi_head_attention(Var<T>, Var<T>, Var<T>, const AttentionWeights<T>&, std::size_t,           \
                                       const std::vector<std::uint8_t>*, const AttentionProbe*, AttentionKind);   \
  template Var<T> position_wise_ffn(Var<T>, Var<T>, Var<T>, Var<T>, Var<T>);                                      \
  template BasicTensor<T> positional_encoding<T>(std::size_t, std::size_t);                                       \
  template EncoderOutput<T> encode_text(const Forward<T>&, std::span<const TokenId>);                             \
  template Var<T> visual_attend(Var<T>, Var<T>, const AttentionProbe*);                                           \
  template Var<T> visual_context(const Forward<T>&, const region::RegionFeatureSet&);                             \
  template Var<T> fuse_multimodal(Var<T>, Var<T>, Var<T>, Var<T>);                                                \
  template std::optional<Var<T>> multimodal_context(const Forward<T>&, const EncoderOutput<T>&,                   \
                                                    const region::RegionFeatureSet*);                             \
  template Var<T> decode(const Forward<T>&, std::span<const TokenId>, const EncoderOutput<T>&,                    \
                         std::optional<Var<T>>);                                                                  \
  template Var<T> sequence_loss(const Forward<T>&, std::span<const TokenId>, std::span<const TokenId>,            \
                                const region::RegionFeatureSet*);

MMFEED_INSTANTIATE_MODEL(float)
MMFEED_INSTANTIATE_MODEL(double)

}  // namespace mmfeed::model
