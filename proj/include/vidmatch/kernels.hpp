/**
 * Copyright 2026 The vidmatch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Data-parallel inner loops. Each entry has a scalar reference implementation
// and an AVX2+FMA variant; the table is selected once at startup from CPUID.
// Setting VIDMATCH_ISA=scalar in the environment forces the reference path.

#include <cstddef>
#include <optional>

#include "vidmatch/common.hpp"

namespace vidmatch::kernels {

/// All matrices row-major with explicit leading dimensions.
struct KernelTable {
  const char* isa;

  /// C[M,N] = beta*C + A[M,K] * B[K,N]. beta is 0 or 1.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
                  const Real* b, std::size_t ldb, Real beta, Real* c, std::size_t ldc);
  /// C[M,N] = beta*C + A[M,K] * B[N,K]^T. beta is 0 or 1.
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
                  const Real* b, std::size_t ldb, Real beta, Real* c, std::size_t ldc);
  /// y += alpha * x
  void (*axpy)(std::size_t n, Real alpha, const Real* x, Real* y);
  Real (*dot)(std::size_t n, const Real* x, const Real* y);
  /// out = clamp(lambda*x + (1-lambda)*u, min(x,u), max(x,u))
  void (*lerp)(std::size_t n, Real lambda, const Real* x, const Real* u, Real* out);
  /// PyTorch-style SGD: g = grad + wd*w; buf = mom*buf + g; w -= lr*buf
  void (*sgd_momentum)(std::size_t n, Real lr, Real momentum, Real weight_decay, Real* w, const Real* grad,
                       Real* buf);
};

const KernelTable& scalar();
/// Present only when compiled for x86-64 and the CPU reports AVX2 and FMA.
std::optional<KernelTable> avx2();

/// The active table. Resolved on first use, constant afterwards.
const KernelTable& active();

}  // namespace vidmatch::kernels
