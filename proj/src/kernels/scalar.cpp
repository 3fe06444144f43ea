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
#include <algorithm>

#include "vidmatch/kernels.hpp"

namespace vidmatch::kernels {
namespace {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda, const Real* b,
             std::size_t ldb, Real beta, Real* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * ldc;
    if (beta == Real(0)) std::fill(crow, crow + n, Real(0));
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a[i * lda + p];
      const Real* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda, const Real* b,
             std::size_t ldb, Real beta, Real* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * lda + p] * b[j * ldb + p];
      c[i * ldc + j] = (beta == Real(0) ? Real(0) : c[i * ldc + j]) + acc;
    }
  }
}

void axpy(std::size_t n, Real alpha, const Real* x, Real* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

Real dot(std::size_t n, const Real* x, const Real* y) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void lerp(std::size_t n, Real lambda, const Real* x, const Real* u, Real* out) {
  const Real rest = Real(1) - lambda;
  for (std::size_t i = 0; i < n; ++i) {
    const Real v = lambda * x[i] + rest * u[i];
    out[i] = std::clamp(v, std::min(x[i], u[i]), std::max(x[i], u[i]));
  }
}

void sgd_momentum(std::size_t n, Real lr, Real momentum, Real weight_decay, Real* w, const Real* grad,
                  Real* buf) {
  for (std::size_t i = 0; i < n; ++i) {
    const Real g = grad[i] + weight_decay * w[i];
    buf[i] = momentum * buf[i] + g;
    w[i] -= lr * buf[i];
  }
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{"scalar", gemm_nn, gemm_nt, axpy, dot, lerp, sgd_momentum};
  return table;
}

}  // namespace vidmatch::kernels
