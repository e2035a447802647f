// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/tensor/optim.hpp"

#include <cmath>

namespace mmfeed {

void ParameterStore::add(const std::string& name, Tensor value) {
  if (name.empty()) throw Error("parameter name must not be empty");
  if (contains(name)) throw Error("duplicate parameter name: " + name);
  const Shape shape = value.shape();
  entries_.emplace(name, std::move(value));
  adam_m_.emplace(name, Tensor(shape));
  adam_v_.emplace(name, Tensor(shape));
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

Tensor& ParameterStore::get_mutable(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

void adam_step(ParameterStore& store, const GradientMap& grads, const AdamOptions& options) {
  for (const auto& [name, param] : store.entries_) {
    auto it = grads.find(name);
    if (it == grads.end()) throw Error("adam_step: missing gradient for " + name);
    if (it->second.shape() != param.shape()) {
      throw DimensionError("adam_step: gradient for " + name + " has shape " + shape_string(it->second.shape()) +
                           ", parameter has " + shape_string(param.shape()));
    }
  }
  store.step_count_ += 1;
  const double t = static_cast<double>(store.step_count_);
  const float correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(options.beta1), t));
  const float correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(options.beta2), t));
  for (auto& [name, param] : store.entries_) {
    const Tensor& g = grads.at(name);
    Tensor& m = store.adam_m_.at(name);
    Tensor& v = store.adam_v_.at(name);
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = options.beta1 * m[i] + (1.0f - options.beta1) * g[i];
      v[i] = options.beta2 * v[i] + (1.0f - options.beta2) * g[i] * g[i];
      const float m_hat = m[i] / correction1;
      const float v_hat = v[i] / correction2;
      param[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
  }
}

double clip_global_norm(GradientMap& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, g] : grads) {
    for (float v : g.data()) sq += static_cast<double>(v) * v;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const float factor = static_cast<float>(max_norm / norm);
    for (auto& [_, g] : grads) {
      for (float& v : g.data()) v *= factor;
    }
  }
  return norm;
}

}  // namespace mmfeed
