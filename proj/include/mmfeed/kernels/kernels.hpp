// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mmfeed::kernels {

// Inner loops used by the tensor engine. Every variant implements the same
// contract as the scalar reference; elementwise kernels are bit-identical to
// it, reductions may differ by summation order only.
struct KernelSet {
  const char* name;
  float (*dot)(const float* a, const float* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  // out = a + b (out may alias a or b)
  void (*add)(const float* a, const float* b, float* out, std::size_t n);
  void (*scale)(float alpha, float* x, std::size_t n);
  void (*relu)(const float* x, float* out, std::size_t n);
  float (*sum)(const float* x, std::size_t n);
  float (*max)(const float* x, std::size_t n);
};

const KernelSet& scalar_kernels();
// nullptr when the variant is not compiled in or the CPU lacks support.
const KernelSet* avx2_kernels();
const KernelSet* neon_kernels();

std::vector<const KernelSet*> available_kernels();

// The set used by the engine. Chosen once on first use: the best supported
// variant, unless MMFEED_KERNELS=scalar|avx2|neon names another one.
const KernelSet& active();

// Overrides the active set; returns false if `name` is unavailable. Not
// thread-safe, intended for tests and benchmarks.
bool select(std::string_view name);

namespace ref {

template <class T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void add(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <class T>
void scale(T alpha, T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

template <class T>
void relu(const T* x, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
T sum(const T* x, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <class T>
T max(const T* x, std::size_t n) {
  T m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

}  // namespace ref

// Typed front-end: float goes through the active KernelSet, other types use
// the reference loops.
template <class T>
struct Ops {
  static T dot(const T* a, const T* b, std::size_t n) { return ref::dot(a, b, n); }
  static void axpy(T alpha, const T* x, T* y, std::size_t n) { ref::axpy(alpha, x, y, n); }
  static void add(const T* a, const T* b, T* out, std::size_t n) { ref::add(a, b, out, n); }
  static void scale(T alpha, T* x, std::size_t n) { ref::scale(alpha, x, n); }
  static void relu(const T* x, T* out, std::size_t n) { ref::relu(x, out, n); }
  static T sum(const T* x, std::size_t n) { return ref::sum(x, n); }
  static T max(const T* x, std::size_t n) { return ref::max(x, n); }
};

template <>
struct Ops<float> {
  static float dot(const float* a, const float* b, std::size_t n) { return active().dot(a, b, n); }
  static void axpy(float alpha, const float* x, float* y, std::size_t n) { active().axpy(alpha, x, y, n); }
  static void add(const float* a, const float* b, float* out, std::size_t n) { active().add(a, b, out, n); }
  static void scale(float alpha, float* x, std::size_t n) { active().scale(alpha, x, n); }
  static void relu(const float* x, float* out, std::size_t n) { active().relu(x, out, n); }
  static float sum(const float* x, std::size_t n) { return active().sum(x, n); }
  static float max(const float* x, std::size_t n) { return active().max(x, n); }
};

// Row-major products built on dot/axpy.
//   gemm_nn: C[m×n] (+)= A[m×k] · B[k×n]
//   gemm_nt: C[m×n] (+)= A[m×k] · B[n×k]^T
//   gemm_tn: C[m×n] (+)= A[k×m]^T · B[k×n]
// Each output row of gemm_nn accumulates over k in order, so rows never
// depend on the values of other rows.
template <class T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * k + p];
      if (aip != T(0)) Ops<T>::axpy(aip, b + p * n, crow, n);
    }
  }
}

template <class T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const T v = Ops<T>::dot(a + i * k, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
  }
}

template <class T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < m; ++i) {
      const T api = a[p * m + i];
      if (api != T(0)) Ops<T>::axpy(api, b + p * n, c + i * n, n);
    }
  }
}

}  // namespace mmfeed::kernels
