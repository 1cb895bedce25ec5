// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string_view>

#include "natres/simd/kernels.hpp"

namespace natres::simd {

#if !defined(NATRES_HAVE_AVX2)
const KernelTable* avx2_kernels() { return nullptr; }
#endif

bool cpu_has_avx2() {
#if defined(NATRES_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable& select_kernels() {
  const char* env = std::getenv("NATRES_SIMD");
  const std::string_view want = env ? env : "auto";
  if (want == "scalar") return scalar_kernels();
  const bool auto_pick = want.empty() || want == "auto";
  if ((auto_pick || want == "avx2") && avx2_kernels() && cpu_has_avx2()) {
    return *avx2_kernels();
  }
  if ((auto_pick || want == "neon") && neon_kernels()) return *neon_kernels();
  return scalar_kernels();
}

}  // namespace

const KernelTable& active_kernels() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace natres::simd
