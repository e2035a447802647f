// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "mmfeed/error.hpp"
#include "mmfeed/model/model.hpp"

namespace mmfeed::model {

namespace {

double xavier(std::size_t fan_in, std::size_t fan_out) { return std::sqrt(6.0 / double(fan_in + fan_out)); }

void add_matrix(std::vector<ParamSpec>& out, std::string name, std::size_t rows, std::size_t cols) {
  out.push_back({std::move(name), {rows, cols}, Init::Uniform, xavier(rows, cols)});
}

void add_vector(std::vector<ParamSpec>& out, std::string name, std::size_t n, Init init) {
  out.push_back({std::move(name), {n}, init, 0.0});
}

void add_attention(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d) {
  for (const char* w : {"wq", "wk", "wv", "wo"}) add_matrix(out, prefix + "." + w, d, d);
}

void add_norm(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d) {
  add_vector(out, prefix + ".gain", d, Init::Ones);
  add_vector(out, prefix + ".bias", d, Init::Zeros);
}

void add_ffn(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d, std::size_t hidden) {
  add_matrix(out, prefix + ".w1", d, hidden);
  add_vector(out, prefix + ".b1", hidden, Init::Zeros);
  add_matrix(out, prefix + ".w2", hidden, d);
  add_vector(out, prefix + ".b2", d, Init::Zeros);
}

// FNV-1a, mixed into the run seed per parameter.
std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::vector<ParamSpec> parameter_specs(const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.d_model, dv = c.d_visual, V = c.vocab_size;
  std::vector<ParamSpec> out;
  out.push_back({"embed.tok", {V, d}, Init::Uniform, std::sqrt(3.0 / double(d))});
  for (std::size_t l = 0; l < c.n_layers_enc; ++l) {
    const std::string p = "enc." + std::to_string(l);
    add_attention(out, p + ".self_attn", d);
    add_norm(out, p + ".norm1", d);
    add_ffn(out, p + ".ffn", d, c.d_ffn_hidden);
    add_norm(out, p + ".norm2", d);
  }
  if (uses_visual(c.ablation)) {
    add_matrix(out, "fusion.w", d + dv, d);
    add_vector(out, "fusion.b", d, Init::Zeros);
  }
  if (c.ablation == Ablation::TVA || c.ablation == Ablation::TVAR) add_norm(out, "visual.norm", dv);
  if (c.ablation == Ablation::TVAR) add_matrix(out, "visual.box.w", 4, dv);
  for (std::size_t l = 0; l < c.n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    add_attention(out, p + ".self_attn", d);
    add_norm(out, p + ".norm1", d);
    add_attention(out, p + ".cross_attn", d);
    add_norm(out, p + ".norm2", d);
    if (uses_visual(c.ablation)) {
      add_attention(out, p + ".mm_attn", d);
      add_norm(out, p + ".norm3", d);
    }
    add_ffn(out, p + ".ffn", d, c.d_ffn_hidden);
    add_norm(out, p + ".norm4", d);
  }
  // Small output weights keep the initial distribution close to uniform.
  out.push_back({"out.w", {d, V}, Init::Uniform, 0.1 * std::sqrt(3.0 / double(d))});
  add_vector(out, "out.b", V, Init::Zeros);
  return out;
}

ParameterStore init_parameters(const ModelConfig& config, std::uint64_t seed) {
  ParameterStore store;
  for (const ParamSpec& spec : parameter_specs(config)) {
    Tensor t(spec.shape);
    switch (spec.init) {
      case Init::Zeros: break;
      case Init::Ones: std::fill(t.data().begin(), t.data().end(), 1.0f); break;
      case Init::Uniform: {
        std::mt19937_64 rng(seed ^ name_hash(spec.name));
        for (float& v : t.data()) {
          const double u = double(rng() >> 11) * 0x1.0p-53;
          v = static_cast<float>((2.0 * u - 1.0) * spec.limit);
        }
        break;
      }
    }
    store.add(spec.name, std::move(t));
  }
  return store;
}

void check_parameters(const ParameterStore& store, const ModelConfig& config) {
  const auto specs = parameter_specs(config);
  if (specs.size() != store.size()) {
    throw Error("checkpoint holds " + std::to_string(store.size()) + " parameters, the configuration needs " +
                std::to_string(specs.size()));
  }
  for (const ParamSpec& spec : specs) {
    if (!store.contains(spec.name)) throw Error("checkpoint lacks parameter " + spec.name);
    const Shape& got = store.get(spec.name).shape();
    if (got != spec.shape) {
      throw DimensionError("parameter " + spec.name + " has shape " + shape_string(got) + ", configuration needs " +
                           shape_string(spec.shape));
    }
  }
}

}  // namespace mmfeed::model
