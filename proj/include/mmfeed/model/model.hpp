// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmfeed/model/config.hpp"
#include "mmfeed/region/region.hpp"
#include "mmfeed/tensor/graph.hpp"
#include "mmfeed/tensor/optim.hpp"
#include "mmfeed/types.hpp"

namespace mmfeed::model {

// --- parameters ------------------------------------------------------------

enum class Init { Zeros, Ones, Uniform };

struct ParamSpec {
  std::string name;
  Shape shape;
  Init init = Init::Uniform;
  double limit = 0;  // half-width for Init::Uniform
};

// Every parameter of the configured architecture, in construction order.
std::vector<ParamSpec> parameter_specs(const ModelConfig& config);

// Each tensor draws from its own generator seeded by (seed, name), so shared
// parameters start identical across ablation levels.
ParameterStore init_parameters(const ModelConfig& config, std::uint64_t seed);

// Throws mmfeed::Error if names or shapes differ from parameter_specs().
void check_parameters(const ParameterStore& store, const ModelConfig& config);

// --- attention probing -----------------------------------------------------

enum class AttentionKind { EncoderSelf, DecoderSelf, Cross, Multimodal, Visual };
const char* to_string(AttentionKind kind);

// Copy of one attention weight matrix as computed in a forward pass.
struct AttentionRecord {
  AttentionKind kind;
  std::size_t rows = 0, cols = 0;
  std::vector<double> weights;       // rows × cols
  std::vector<std::uint8_t> allowed;  // rows × cols, empty when unmasked
};

using AttentionProbe = std::function<void(const AttentionRecord&)>;

// --- forward pass state ----------------------------------------------------

// Parameters bound into a graph plus the switches of one forward pass.
template <class T>
struct Forward {
  Graph<T>* graph = nullptr;
  ModelConfig config;
  std::map<std::string, Var<T>> params;
  std::mt19937_64* dropout_rng = nullptr;  // nullptr disables dropout
  const AttentionProbe* probe = nullptr;

  Var<T> p(const std::string& name) const;
};

// trainable = true registers graph parameters (gradients wanted); false binds
// plain constants for inference.
template <class T>
Forward<T> bind(Graph<T>& graph, const ModelConfig& config, const std::map<std::string, BasicTensor<T>>& params,
                bool trainable);
Forward<float> bind(Graph<float>& graph, const ModelConfig& config, const ParameterStore& store, bool trainable);

// --- building blocks -------------------------------------------------------

// softmax(Q Kᵀ / sqrt(d_k)) V. `allowed` (q × k, optional) marks usable
// entries; a query row with none throws.
template <class T>
Var<T> scaled_dot_attention(Var<T> q, Var<T> k, Var<T> v, const std::vector<std::uint8_t>* allowed,
                            const AttentionProbe* probe = nullptr,
                            AttentionKind kind = AttentionKind::EncoderSelf);

template <class T>
struct AttentionWeights {
  Var<T> wq, wk, wv, wo;  // [d_model × d_model] each, heads are column blocks
};

template <class T>
Var<T> multi_head_attention(Var<T> x_q, Var<T> x_k, Var<T> x_v, const AttentionWeights<T>& w, std::size_t n_heads,
                            const std::vector<std::uint8_t>* allowed, const AttentionProbe* probe = nullptr,
                            AttentionKind kind = AttentionKind::EncoderSelf);

// max(0, x W1 + b1) W2 + b2, row by row.
template <class T>
Var<T> position_wise_ffn(Var<T> x, Var<T> w1, Var<T> b1, Var<T> w2, Var<T> b2);

// Sinusoidal position table [rows × d].
template <class T>
BasicTensor<T> positional_encoding(std::size_t rows, std::size_t d);

// --- encoder, visual path, fusion, decoder ---------------------------------

template <class T>
struct EncoderOutput {
  Var<T> z_star;                   // [m × d_model]
  std::vector<std::uint8_t> mask;  // 1 for real tokens, 0 for PAD
};

// Throws on empty input, input longer than max_text_len, or all-PAD input.
template <class T>
EncoderOutput<T> encode_text(const Forward<T>& f, std::span<const TokenId> ids);

// Attention pooling of region rows B [n × d_v] against g [1 × d_v]:
// c = B gᵀ, a = softmax(c), g* = a B. Returns [1 × d_v].
template <class T>
Var<T> visual_attend(Var<T> regions, Var<T> g, const AttentionProbe* probe = nullptr);

// The visual context vector g* for the configured ablation level.
// TV: the image-level vector. TVA: visual_attend over projected region
// features. TVAR: as TVA with normalized box coordinates mapped into the
// feature space first.
template <class T>
Var<T> visual_context(const Forward<T>& f, const region::RegionFeatureSet& rfs);

// y*_t = [z*_t ; g*] W + b for every row t.
template <class T>
Var<T> fuse_multimodal(Var<T> z_star, Var<T> g_star, Var<T> w, Var<T> b);

// y* for the configured ablation, nullopt for T. Throws if a visual level
// is configured and `rfs` is null.
template <class T>
std::optional<Var<T>> multimodal_context(const Forward<T>& f, const EncoderOutput<T>& enc,
                                         const region::RegionFeatureSet* rfs);

// Logits [t × vocab_size] for decoder input `target_in` (BOS-first).
template <class T>
Var<T> decode(const Forward<T>& f, std::span<const TokenId> target_in, const EncoderOutput<T>& enc,
              std::optional<Var<T>> y_star);

// Teacher-forced cross-entropy of one (article, comment) pair. `comment` is
// framed BOS ... EOS; inputs are comment[0..n-1), targets comment[1..n).
template <class T>
Var<T> sequence_loss(const Forward<T>& f, std::span<const TokenId> article, std::span<const TokenId> comment,
                     const region::RegionFeatureSet* rfs);

// Argmax decoding from BOS. Stops after EOS (not returned) or max_gen_len
// tokens.
TokenIds generate_greedy(const ParameterStore& store, const ModelConfig& config, std::span<const TokenId> article,
                         const region::RegionFeatureSet* rfs);

// Mean over rows of z* for the given input, as a plain vector.
std::vector<float> mean_pooled_encoding(const ParameterStore& store, const ModelConfig& config,
                                        std::span<const TokenId> article);

}  // namespace mmfeed::model
