// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmfeed/tensor/tensor.hpp"
#include "mmfeed/types.hpp"

namespace mmfeed {

template <class T>
class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <class T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;

  const BasicTensor<T>& value() const { return graph->value(id); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return graph->requires_grad(id); }
};

// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
// so reverse creation order is a valid topological order for backward().
template <class T>
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(BasicTensor<T> value);
  // Leaf that receives a gradient; `name` keys parameter_gradients().
  Var<T> parameter(std::string name, BasicTensor<T> value);

  const BasicTensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Throws if `loss` does not hold exactly one element.
  void backward(Var<T> loss);

  // Gradient reaching `v` in the last backward(); zeros if none did.
  BasicTensor<T> grad(Var<T> v) const;
  std::map<std::string, BasicTensor<T>> parameter_gradients() const;

  // --- used by operation implementations ---
  Var<T> record(const char* op, BasicTensor<T> value, std::initializer_list<Var<T>> inputs,
                Backward backward);
  Var<T> record(const char* op, BasicTensor<T> value, std::span<const Var<T>> inputs,
                Backward backward);
  const BasicTensor<T>& out_grad(std::size_t id) const { return nodes_[id].grad; }
  // Accumulation buffer for an input's gradient, or nullptr if it needs none.
  BasicTensor<T>* grad_slot(std::size_t id);

 private:
  struct Node {
    BasicTensor<T> value;
    BasicTensor<T> grad;
    bool requires_grad = false;
    Backward backward;
    std::string name;
  };

  std::deque<Node> nodes_;
};

// --- operations -----------------------------------------------------------
// All operations check operand shapes (DimensionError) and reject
// non-finite results (NumericError).

template <class T> Var<T> matmul(Var<T> a, Var<T> b);
template <class T> Var<T> transpose(Var<T> a);
template <class T> Var<T> add(Var<T> a, Var<T> b);
// x[... × d] + bias[d], broadcast over rows.
template <class T> Var<T> add_bias(Var<T> x, Var<T> bias);
template <class T> Var<T> scale(Var<T> x, T factor);
template <class T> Var<T> relu(Var<T> x);
// Inverted dropout: kept entries are divided by (1 - rate). rate <= 0 is the
// identity and consumes no randomness.
template <class T> Var<T> dropout(Var<T> x, T rate, std::mt19937_64& rng);
// Row-wise softmax of a matrix. `allowed` (rows*cols, optional) marks the
// entries that take part; the others come out exactly 0. A row with no
// allowed entry is an error.
template <class T> Var<T> softmax_rows(Var<T> x, const std::vector<std::uint8_t>* allowed = nullptr);
template <class T> Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps = T(1e-5));
// Rows of `table` selected by `ids`.
template <class T> Var<T> embedding(Var<T> table, std::span<const TokenId> ids);
template <class T> Var<T> concat_cols(std::span<const Var<T>> parts);
template <class T> Var<T> slice_cols(Var<T> x, std::size_t start, std::size_t count);
// A single row repeated `rows` times.
template <class T> Var<T> repeat_rows(Var<T> row, std::size_t rows);
template <class T> Var<T> mean_rows(Var<T> x);
template <class T> Var<T> reshape(Var<T> x, Shape shape);
template <class T> Var<T> sum(Var<T> x);
template <class T> Var<T> dot(Var<T> a, Var<T> b);
// Mean negative log-softmax over rows whose target is not `pad_id`.
template <class T> Var<T> cross_entropy(Var<T> logits, std::span<const TokenId> targets, TokenId pad_id);

}  // namespace mmfeed
