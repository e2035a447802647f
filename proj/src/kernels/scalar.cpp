// SPDX-License-Identifier: Apache-2.0
#include "mmfeed/kernels/kernels.hpp"

namespace mmfeed::kernels {
namespace {

float dot(const float* a, const float* b, std::size_t n) { return ref::dot(a, b, n); }
void axpy(float alpha, const float* x, float* y, std::size_t n) { ref::axpy(alpha, x, y, n); }
void add(const float* a, const float* b, float* out, std::size_t n) { ref::add(a, b, out, n); }
void scale(float alpha, float* x, std::size_t n) { ref::scale(alpha, x, n); }
void relu(const float* x, float* out, std::size_t n) { ref::relu(x, out, n); }
float sum(const float* x, std::size_t n) { return ref::sum(x, n); }
float max(const float* x, std::size_t n) { return ref::max(x, n); }

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{"scalar", dot, axpy, add, scale, relu, sum, max};
  return set;
}

}  // namespace mmfeed::kernels
