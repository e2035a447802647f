// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/tensor/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmfeed/kernels/kernels.hpp"

namespace mmfeed {

namespace {

using kernels::Ops;

void require(bool ok, const std::string& message) {
  if (!ok) throw DimensionError(message);
}

template <class T>
void require_matrix(const BasicTensor<T>& t, const char* op) {
  require(t.rank() == 2, std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

template <class T>
void accumulate(BasicTensor<T>* slot, std::span<const T> g) {
  if (slot != nullptr) Ops<T>::add(slot->ptr(), g.data(), slot->ptr(), g.size());
}

}  // namespace

template <class T>
Var<T> Graph<T>::constant(BasicTensor<T> value) {
  if (!value.all_finite()) throw NumericError("constant holds non-finite values");
  nodes_.push_back(Node{std::move(value), {}, false, {}, {}});
  return Var<T>{this, nodes_.size() - 1};
}

template <class T>
Var<T> Graph<T>::parameter(std::string name, BasicTensor<T> value) {
  if (!value.all_finite()) throw NumericError("parameter " + name + " holds non-finite values");
  nodes_.push_back(Node{std::move(value), {}, true, {}, std::move(name)});
  return Var<T>{this, nodes_.size() - 1};
}

template <class T>
Var<T> Graph<T>::record(const char* op, BasicTensor<T> value, std::initializer_list<Var<T>> inputs,
                        Backward backward) {
  return record(op, std::move(value), std::span<const Var<T>>(inputs.begin(), inputs.size()),
                std::move(backward));
}

template <class T>
Var<T> Graph<T>::record(const char* op, BasicTensor<T> value, std::span<const Var<T>> inputs,
                        Backward backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + " produced non-finite values");
  bool needs_grad = false;
  for (const Var<T>& in : inputs) {
    if (in.graph != this) throw Error(std::string(op) + ": operand belongs to another graph");
    needs_grad = needs_grad || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs_grad, needs_grad ? std::move(backward) : Backward{}, {}});
  return Var<T>{this, nodes_.size() - 1};
}

template <class T>
BasicTensor<T>* Graph<T>::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = BasicTensor<T>(n.value.shape());
  return &n.grad;
}

template <class T>
void Graph<T>::backward(Var<T> loss) {
  if (loss.graph != this) throw Error("backward: loss belongs to another graph");
  if (nodes_[loss.id].value.size() != 1) {
    throw DimensionError("backward requires a scalar loss, got shape " +
                         shape_string(nodes_[loss.id].value.shape()));
  }
  for (Node& n : nodes_) n.grad = BasicTensor<T>();
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad = BasicTensor<T>::filled(nodes_[loss.id].value.shape(), T(1));
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward(*this, i);
  }
}

template <class T>
BasicTensor<T> Graph<T>::grad(Var<T> v) const {
  const Node& n = nodes_.at(v.id);
  return n.grad.empty() ? BasicTensor<T>(n.value.shape()) : n.grad;
}

template <class T>
std::map<std::string, BasicTensor<T>> Graph<T>::parameter_gradients() const {
  std::map<std::string, BasicTensor<T>> out;
  for (const Node& n : nodes_) {
    if (n.name.empty()) continue;
    BasicTensor<T> g = n.grad.empty() ? BasicTensor<T>(n.value.shape()) : n.grad;
    auto [it, inserted] = out.try_emplace(n.name, g);
    if (!inserted) Ops<T>::add(it->second.ptr(), g.ptr(), it->second.ptr(), g.size());
  }
  return out;
}

// --- operations -----------------------------------------------------------

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  require(av.cols() == bv.rows(), "matmul: inner dimensions differ: " + shape_string(av.shape()) +
                                      " x " + shape_string(bv.shape()));
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  BasicTensor<T> out({m, n});
  kernels::gemm_nn(m, n, k, av.ptr(), bv.ptr(), out.ptr(), false);
  return a.graph->record("matmul", std::move(out), {a, b}, [a, b, m, n, k](Graph<T>& g, std::size_t self) {
    const auto& dy = g.out_grad(self);
    if (auto* da = g.grad_slot(a.id)) kernels::gemm_nt(m, k, n, dy.ptr(), g.value(b.id).ptr(), da->ptr(), true);
    if (auto* db = g.grad_slot(b.id)) kernels::gemm_tn(k, n, m, g.value(a.id).ptr(), dy.ptr(), db->ptr(), true);
  });
}

template <class T>
Var<T> transpose(Var<T> a) {
  const auto& av = a.value();
  require_matrix(av, "transpose");
  const std::size_t m = av.rows(), n = av.cols();
  BasicTensor<T> out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  return a.graph->record("transpose", std::move(out), {a}, [a, m, n](Graph<T>& g, std::size_t self) {
    const auto& dy = g.out_grad(self);
    if (auto* da = g.grad_slot(a.id)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) da->at(i, j) += dy.at(j, i);
    }
  });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  require(av.shape() == bv.shape(),
          "add: shapes differ: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  BasicTensor<T> out(av.shape());
  Ops<T>::add(av.ptr(), bv.ptr(), out.ptr(), out.size());
  return a.graph->record("add", std::move(out), {a, b}, [a, b](Graph<T>& g, std::size_t self) {
    const auto& dy = g.out_grad(self);
    accumulate(g.grad_slot(a.id), dy.data());
    accumulate(g.grad_slot(b.id), dy.data());
  });
}

template <class T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
  const auto& xv = x.value();
  const auto& bv = bias.value();
  require(bv.rank() == 1 && bv.size() == xv.cols(),
          "add_bias: bias " + shape_string(bv.shape()) + " does not match last axis of " +
              shape_string(xv.shape()));
  const std::size_t d = xv.cols(), rows = xv.size() / d;
  BasicTensor<T> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) Ops<T>::add(xv.ptr() + r * d, bv.ptr(), out.ptr() + r * d, d);
  return x.graph->record("add_bias", std::move(out), {x, bias}, [x, bias, d, rows](Graph<T>& g, std::size_t self) {
    const auto& dy = g.out_grad(self);
    accumulate(g.grad_slot(x.id), dy.data());
    if (auto* db = g.grad_slot(bias.id)) {
      for (std::size_t r = 0; r < rows; ++r) Ops<T>::add(db->ptr(), dy.ptr() + r * d, db->ptr(), d);
    }
  });
}

template <class T>
Var<T> scale(Var<T> x, T factor) {
  BasicTensor<T> out = x.value();
  Ops<T>::scale(factor, out.ptr(), out.size());
  return x.graph->record("scale", std::move(out), {x}, [x, factor](Graph<T>& g, std::size_t self) {
    if (auto* dx = g.grad_slot(x.id)) {
      const auto& dy = g.out_grad(self);
      Ops<T>::axpy(factor, dy.ptr(), dx->ptr(), dy.size());
    }
  });
}

template <class T>
Var<T> relu(Var<T> x) {
  const auto& xv = x.value();
  BasicTensor<T> out(xv.shape());
  Ops<T>::relu(xv.ptr(), out.ptr(), out.size());
  return x.graph->record("relu", std::move(out), {x}, [x](Graph<T>& g, std::size_t self) {
    if (auto* dx = g.grad_slot(x.id)) {
      const auto& dy = g.out_grad(self);
      const auto& in = g.value(x.id);
      for (std::size_t i = 0; i < dy.size(); ++i) {
        if (in[i] > T(0)) (*dx)[i] += dy[i];
      }
    }
  });
}

template <class T>
Var<T> dropout(Var<T> x, T rate, std::mt19937_64& rng) {
  if (rate <= T(0)) return x;
  if (rate >= T(1)) throw Error("dropout rate must be < 1");
  const T keep = T(1) - rate;
  const auto& xv = x.value();
  std::vector<T> mask(xv.size());
  for (T& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < static_cast<double>(keep) ? T(1) / keep : T(0);
  }
  BasicTensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
  return x.graph->record("dropout", std::move(out), {x}, [x, mask = std::move(mask)](Graph<T>& g, std::size_t self) {
    if (auto* dx = g.grad_slot(x.id)) {
      const auto& dy = g.out_grad(self);
      for (std::size_t i = 0; i < dy.size(); ++i) (*dx)[i] += dy[i] * mask[i];
    }
  });
}

template <class T>
Var<T> softmax_rows(Var<T> x, const std::vector<std::uint8_t>* allowed) {
  const auto& xv = x.value();
  require_matrix(xv, "softmax_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (allowed != nullptr) {
    require(allowed->size() == m * n, "softmax_rows: mask has " + std::to_string(allowed->size()) +
                                          " entries for a " + shape_string(xv.shape()) + " input");
  }
  BasicTensor<T> out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = xv.ptr() + i * n;
    T* y = out.ptr() + i * n;
    if (allowed == nullptr) {
      const T mx = Ops<T>::max(row, n);
      for (std::size_t j = 0; j < n; ++j) y[j] = std::exp(row[j] - mx);
      Ops<T>::scale(T(1) / Ops<T>::sum(y, n), y, n);
      continue;
    }
    const std::uint8_t* ok = allowed->data() + i * n;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (ok[j] && row[j] > mx) mx = row[j];
    }
    if (mx == -std::numeric_limits<T>::infinity()) {
      throw Error("softmax_rows: row " + std::to_string(i) + " is fully masked");
    }
    T total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (ok[j]) {
        y[j] = std::exp(row[j] - mx);
        total += y[j];
      }
    }
    const T inv = T(1) / total;
    for (std::size_t j = 0; j < n; ++j) {
      if (ok[j]) y[j] *= inv;
    }
  }
  return x.graph->record("softmax_rows", std::move(out), {x}, [x, m, n](Graph<T>& g, std::size_t self) {
    auto* dx = g.grad_slot(x.id);
    if (dx == nullptr) return;
    const auto& dy = g.out_grad(self);
    const auto& y = g.value(self);
    for (std::size_t i = 0; i < m; ++i) {
      const T* yr = y.ptr() + i * n;
      const T* dyr = dy.ptr() + i * n;
      const T inner = Ops<T>::dot(yr, dyr, n);
      T* dxr = dx->ptr() + i * n;
      for (std::size_t j = 0; j < n; ++j) dxr[j] += yr[j] * (dyr[j] - inner);
    }
  });
}

template <class T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps) {
  const auto& xv = x.value();
  const std::size_t d = xv.cols();
  require(gain.value().rank() == 1 && gain.value().size() == d && bias.value().shape() == gain.value().shape(),
          "layer_norm: gain/bias must be [" + std::to_string(d) + "]");
  if (!(eps > T(0))) throw Error("layer_norm: eps must be positive");
  const std::size_t rows = xv.size() / d;
  BasicTensor<T> out(xv.shape());
  std::vector<T> xhat(xv.size());
  std::vector<T> inv_std(rows);
  const T* gp = gain.value().ptr();
  const T* bp = bias.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv.ptr() + r * d;
    const T mean = Ops<T>::sum(row, d) / static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<T>(d);
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (row[j] - mean) * inv;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gp[j] + bp[j];
    }
  }
  return x.graph->record(
      "layer_norm", std::move(out), {x, gain, bias},
      [x, gain, bias, d, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph<T>& g, std::size_t self) {
        const auto& dy = g.out_grad(self);
        auto* dx = g.grad_slot(x.id);
        auto* dg = g.grad_slot(gain.id);
        auto* db = g.grad_slot(bias.id);
        const T* gp = g.value(gain.id).ptr();
        std::vector<T> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* dyr = dy.ptr() + r * d;
          const T* hr = xhat.data() + r * d;
          if (dg != nullptr) {
            for (std::size_t j = 0; j < d; ++j) (*dg)[j] += dyr[j] * hr[j];
          }
          if (db != nullptr) Ops<T>::add(db->ptr(), dyr, db->ptr(), d);
          if (dx == nullptr) continue;
          T sum_dh = 0, sum_dh_h = 0;
          for (std::size_t j = 0; j < d; ++j) {
            dh[j] = dyr[j] * gp[j];
            sum_dh += dh[j];
            sum_dh_h += dh[j] * hr[j];
          }
          const T k = inv_std[r] / static_cast<T>(d);
          T* dxr = dx->ptr() + r * d;
          for (std::size_t j = 0; j < d; ++j) {
            dxr[j] += k * (static_cast<T>(d) * dh[j] - sum_dh - hr[j] * sum_dh_h);
          }
        }
      });
}

template <class T>
Var<T> embedding(Var<T> table, std::span<const TokenId> ids) {
  const auto& tv = table.value();
  require_matrix(tv, "embedding");
  require(!ids.empty(), "embedding: empty id sequence");
  const std::size_t vocab = tv.rows(), d = tv.cols();
  std::vector<TokenId> idv(ids.begin(), ids.end());
  BasicTensor<T> out({idv.size(), d});
  for (std::size_t i = 0; i < idv.size(); ++i) {
    require(idv[i] >= 0 && static_cast<std::size_t>(idv[i]) < vocab,
            "embedding: id " + std::to_string(idv[i]) + " outside table of " + std::to_string(vocab) + " rows");
    std::copy_n(tv.ptr() + static_cast<std::size_t>(idv[i]) * d, d, out.ptr() + i * d);
  }
  return table.graph->record("embedding", std::move(out), {table},
                             [table, d, idv = std::move(idv)](Graph<T>& g, std::size_t self) {
                               auto* dt = g.grad_slot(table.id);
                               if (dt == nullptr) return;
                               const auto& dy = g.out_grad(self);
                               for (std::size_t i = 0; i < idv.size(); ++i) {
                                 T* dst = dt->ptr() + static_cast<std::size_t>(idv[i]) * d;
                                 Ops<T>::add(dst, dy.ptr() + i * d, dst, d);
                               }
                             });
}

template <class T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  require(!parts.empty(), "concat_cols: no operands");
  const std::size_t m = parts[0].value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var<T>& p : parts) {
    require_matrix(p.value(), "concat_cols");
    require(p.value().rows() == m, "concat_cols: row counts differ");
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  BasicTensor<T> out({m, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& pv = parts[k].value();
    for (std::size_t i = 0; i < m; ++i) std::copy_n(pv.ptr() + i * widths[k], widths[k], out.ptr() + i * total + offset);
    offset += widths[k];
  }
  std::vector<Var<T>> inputs(parts.begin(), parts.end());
  Graph<T>* graph = parts[0].graph;
  return graph->record("concat_cols", std::move(out), parts,
                       [inputs, widths, m, total](Graph<T>& g, std::size_t self) {
                         const auto& dy = g.out_grad(self);
                         std::size_t off = 0;
                         for (std::size_t k = 0; k < inputs.size(); ++k) {
                           if (auto* dp = g.grad_slot(inputs[k].id)) {
                             for (std::size_t i = 0; i < m; ++i) {
                               Ops<T>::add(dp->ptr() + i * widths[k], dy.ptr() + i * total + off,
                                           dp->ptr() + i * widths[k], widths[k]);
                             }
                           }
                           off += widths[k];
                         }
                       });
}

template <class T>
Var<T> slice_cols(Var<T> x, std::size_t start, std::size_t count) {
  const auto& xv = x.value();
  require_matrix(xv, "slice_cols");
  const std::size_t m = xv.rows(), n = xv.cols();
  require(count > 0 && start + count <= n, "slice_cols: columns [" + std::to_string(start) + ", " +
                                               std::to_string(start + count) + ") outside " + shape_string(xv.shape()));
  BasicTensor<T> out({m, count});
  for (std::size_t i = 0; i < m; ++i) std::copy_n(xv.ptr() + i * n + start, count, out.ptr() + i * count);
  return x.graph->record("slice_cols", std::move(out), {x}, [x, m, n, start, count](Graph<T>& g, std::size_t self) {
    if (auto* dx = g.grad_slot(x.id)) {
      const auto& dy = g.out_grad(self);
      for (std::size_t i = 0; i < m; ++i) {
        Ops<T>::add(dx->ptr() + i * n + start, dy.ptr() + i * count, dx->ptr() + i * n + start, count);
      }
    }
  });
}

template <class T>
Var<T> repeat_rows(Var<T> row, std::size_t rows) {
  const auto& rv = row.value();
  require(rv.rows() == 1 && rv.rank() <= 2, "repeat_rows: expected a single row, got " + shape_string(rv.shape()));
  require(rows > 0, "repeat_rows: zero rows");
  const std::size_t d = rv.cols();
  BasicTensor<T> out({rows, d});
  for (std::size_t i = 0; i < rows; ++i) std::copy_n(rv.ptr(), d, out.ptr() + i * d);
  return row.graph->record("repeat_rows", std::move(out), {row}, [row, rows, d](Graph<T>& g, std::size_t self) {
    if (auto* dr = g.grad_slot(row.id)) {
      const auto& dy = g.out_grad(self);
      for (std::size_t i = 0; i < rows; ++i) Ops<T>::add(dr->ptr(), dy.ptr() + i * d, dr->ptr(), d);
    }
  });
}

template <class T>
Var<T> mean_rows(Var<T> x) {
  const auto& xv = x.value();
  require_matrix(xv, "mean_rows");
  const std::size_t m = xv.rows(), d = xv.cols();
  BasicTensor<T> out({1, d});
  for (std::size_t i = 0; i < m; ++i) Ops<T>::add(out.ptr(), xv.ptr() + i * d, out.ptr(), d);
  Ops<T>::scale(T(1) / static_cast<T>(m), out.ptr(), d);
  return x.graph->record("mean_rows", std::move(out), {x}, [x, m, d](Graph<T>& g, std::size_t self) {
    if (auto* dx = g.grad_slot(x.id)) {
      const auto& dy = g.out_grad(self);
      const T w = T(1) / static_cast<T>(m);
      for (std::size_t i = 0; i < m; ++i) Ops<T>::axpy(w, dy.ptr(), dx->ptr() + i * d, d);
    }
  });
}

template <class T>
Var<T> reshape(Var<T> x, Shape shape) {
  require(shape_size(shape) == x.value().size(),
          "reshape: " + shape_string(x.shape()) + " cannot become " + shape_string(shape));
  BasicTensor<T> out = x.value().reshaped(std::move(shape));
  return x.graph->record("reshape", std::move(out), {x}, [x](Graph<T>& g, std::size_t self) {
    accumulate(g.grad_slot(x.id), g.out_grad(self).data());
  });
}

template <class T>
Var<T> sum(Var<T> x) {
  const auto& xv = x.value();
  BasicTensor<T> out = BasicTensor<T>::scalar(Ops<T>::sum(xv.ptr(), xv.size()));
  return x.graph->record("sum", std::move(out), {x}, [x](Graph<T>& g, std::size_t self) {
    if (auto* dx = g.grad_slot(x.id)) {
      const T dy = g.out_grad(self)[0];
      for (T& v : dx->data()) v += dy;
    }
  });
}

template <class T>
Var<T> dot(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  require(av.size() == bv.size(), "dot: sizes differ: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  BasicTensor<T> out = BasicTensor<T>::scalar(Ops<T>::dot(av.ptr(), bv.ptr(), av.size()));
  return a.graph->record("dot", std::move(out), {a, b}, [a, b](Graph<T>& g, std::size_t self) {
    const T dy = g.out_grad(self)[0];
    if (auto* da = g.grad_slot(a.id)) Ops<T>::axpy(dy, g.value(b.id).ptr(), da->ptr(), da->size());
    if (auto* db = g.grad_slot(b.id)) Ops<T>::axpy(dy, g.value(a.id).ptr(), db->ptr(), db->size());
  });
}

template <class T>
Var<T> cross_entropy(Var<T> logits, std::span<const TokenId> targets, TokenId pad_id) {
  const auto& lv = logits.value();
  require_matrix(lv, "cross_entropy");
  const std::size_t t = lv.rows(), v = lv.cols();
  require(targets.size() == t, "cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                                   std::to_string(t) + " rows");
  std::vector<TokenId> tg(targets.begin(), targets.end());
  std::size_t count = 0;
  for (TokenId id : tg) {
    if (id == pad_id) continue;
    require(id >= 0 && static_cast<std::size_t>(id) < v,
            "cross_entropy: target " + std::to_string(id) + " outside vocabulary of " + std::to_string(v));
    ++count;
  }
  if (count == 0) throw Error("cross_entropy: empty loss (every target is padding)");
  BasicTensor<T> probs({t, v});
  T total = 0;
  for (std::size_t i = 0; i < t; ++i) {
    if (tg[i] == pad_id) continue;
    const T* row = lv.ptr() + i * v;
    T* p = probs.ptr() + i * v;
    const T mx = Ops<T>::max(row, v);
    for (std::size_t j = 0; j < v; ++j) p[j] = std::exp(row[j] - mx);
    const T z = Ops<T>::sum(p, v);
    Ops<T>::scale(T(1) / z, p, v);
    total += std::log(z) + mx - row[tg[i]];
  }
  const T inv_count = T(1) / static_cast<T>(count);
  BasicTensor<T> out = BasicTensor<T>::scalar(total * inv_count);
  return logits.graph->record(
      "cross_entropy", std::move(out), {logits},
      [logits, tg = std::move(tg), probs = std::move(probs), pad_id, inv_count, t, v](Graph<T>& g, std::size_t self) {
        auto* dl = g.grad_slot(logits.id);
        if (dl == nullptr) return;
        const T w = g.out_grad(self)[0] * inv_count;
        for (std::size_t i = 0; i < t; ++i) {
          if (tg[i] == pad_id) continue;
          Ops<T>::axpy(w, probs.ptr() + i * v, dl->ptr() + i * v, v);
          dl->at(i, static_cast<std::size_t>(tg[i])) -= w;
        }
      });
}

#define MMFEED_INSTANTIATE_OPS(T)                                                           \
  template class Graph<T>;                                                                  \
  template Var<T> matmul(Var<T>, Var<T>);                                                   \
  template Var<T> transpose(Var<T>);                                                        \
  template Var<T> add(Var<T>, Var<T>);                                                      \
  template Var<T> add_bias(Var<T>, Var<T>);                                                 \
  template Var<T> scale(Var<T>, T);                                                         \
  template Var<T> relu(Var<T>);                                                             \
  template Var<T> dropout(Var<T>, T, std::mt19937_64&);                                     \
  template Var<T> softmax_rows(Var<T>, const std::vector<std::uint8_t>*);                   \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, T);                                    \
  template Var<T> embedding(Var<T>, std::span<const TokenId>);                              \
  template Var<T> concat_cols(std::span<const Var<T>>);                                     \
  template Var<T> slice_cols(Var<T>, std::size_t, std::size_t);                             \
  template Var<T> repeat_rows(Var<T>, std::size_t);                                         \
  template Var<T> mean_rows(Var<T>);                                                        \
  template Var<T> reshape(Var<T>, Shape);                                                   \
  template Var<T> sum(Var<T>);                                                              \
  template Var<T> dot(Var<T>, Var<T>);                                                      \
  template Var<T> cross_entropy(Var<T>, std::span<const TokenId>, TokenId);

MMFEED_INSTANTIATE_OPS(float)
MMFEED_INSTANTIATE_OPS(double)

}  // namespace mmfeed
