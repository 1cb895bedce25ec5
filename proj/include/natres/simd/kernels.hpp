// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace natres::simd {

// Float kernels used by the network inner loops. Every variant must agree
// with the scalar reference up to summation-order rounding.
struct KernelTable {
  std::string_view name;
  // sum_i a[i] * b[i]
  float (*dot)(const float* a, const float* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(float alpha, float* x, std::size_t n);
  // sum_i x[i]^2, accumulated in double
  double (*sum_sq)(const float* x, std::size_t n);
};

const KernelTable& scalar_kernels();

// Null when the variant was not compiled in for this target.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

bool cpu_has_avx2();

// Chosen once per process: NATRES_SIMD=scalar|avx2|neon|auto (default auto).
// An unavailable request falls back to scalar.
const KernelTable& active_kernels();

// Convenience wrappers over active_kernels().
inline float dot(std::span<const float> a, std::span<const float> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}
inline void axpy(float alpha, std::span<const float> x, std::span<float> y) {
  active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(float alpha, std::span<float> x) {
  active_kernels().scale(alpha, x.data(), x.size());
}
inline double sum_sq(std::span<const float> x) {
  return active_kernels().sum_sq(x.data(), x.size());
}

}  // namespace natres::simd
