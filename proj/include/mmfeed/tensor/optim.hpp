// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mmfeed/tensor/tensor.hpp"

namespace mmfeed {

using GradientMap = std::map<std::string, Tensor>;

struct AdamOptions;

// Named trainable tensors plus Adam moment buffers. Names are unique; the
// map keeps them in a stable (lexicographic) order.
class ParameterStore {
 public:
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get_mutable(const std::string& name);
  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t element_count() const;

  const std::map<std::string, Tensor>& entries() const noexcept { return entries_; }
  std::uint64_t step_count() const noexcept { return step_count_; }

  template <class T>
  std::map<std::string, BasicTensor<T>> cast() const {
    std::map<std::string, BasicTensor<T>> out;
    for (const auto& [name, t] : entries_) out.emplace(name, t.template cast<T>());
    return out;
  }

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

 private:
  friend void adam_step(ParameterStore&, const GradientMap&, const AdamOptions&);

  std::map<std::string, Tensor> entries_;
  std::map<std::string, Tensor> adam_m_;
  std::map<std::string, Tensor> adam_v_;
  std::uint64_t step_count_ = 0;
};

struct AdamOptions {
  float lr = 5e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// One bias-corrected Adam update. `grads` must hold a gradient of matching
// shape for every parameter.
void adam_step(ParameterStore& store, const GradientMap& grads, const AdamOptions& options);

// Scales all gradients so their global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_global_norm(GradientMap& grads, double max_norm);

}  // namespace mmfeed
