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
// Compiled with -mavx2 -mfma; only reached after a CPUID check in dispatch.cpp.
#include <algorithm>

#include "vidmatch/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace vidmatch::kernels {
namespace {

struct F32Lanes {
  using T = float;
  using V = __m256;
  static constexpr std::size_t kWidth = 8;
  static V zero() { return _mm256_setzero_ps(); }
  static V set1(T v) { return _mm256_set1_ps(v); }
  static V load(const T* p) { return _mm256_loadu_ps(p); }
  static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static V add(V a, V b) { return _mm256_add_ps(a, b); }
  static V mul(V a, V b) { return _mm256_mul_ps(a, b); }
  static V sub(V a, V b) { return _mm256_sub_ps(a, b); }
  static V min(V a, V b) { return _mm256_min_ps(a, b); }
  static V max(V a, V b) { return _mm256_max_ps(a, b); }
  static T hsum(V v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
    return _mm_cvtss_f32(lo);
  }
};

struct F64Lanes {
  using T = double;
  using V = __m256d;
  static constexpr std::size_t kWidth = 4;
  static V zero() { return _mm256_setzero_pd(); }
  static V set1(T v) { return _mm256_set1_pd(v); }
  static V load(const T* p) { return _mm256_loadu_pd(p); }
  static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static V add(V a, V b) { return _mm256_add_pd(a, b); }
  static V mul(V a, V b) { return _mm256_mul_pd(a, b); }
  static V sub(V a, V b) { return _mm256_sub_pd(a, b); }
  static V min(V a, V b) { return _mm256_min_pd(a, b); }
  static V max(V a, V b) { return _mm256_max_pd(a, b); }
  static T hsum(V v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
  }
};

using Lanes = std::conditional_t<std::is_same_v<Real, float>, F32Lanes, F64Lanes>;
using V = Lanes::V;
constexpr std::size_t kW = Lanes::kWidth;

// Rows of C per register tile and K-panel depth. The panel keeps the B strip
// (kKc x 2 vectors) resident in L1 while four C rows accumulate.
constexpr std::size_t kMr = 4;
constexpr std::size_t kKc = 256;

template <std::size_t Rows>
void tile_nn(std::size_t kc, const Real* a, std::size_t lda, const Real* b, std::size_t ldb, Real* c,
             std::size_t ldc) {
  V acc0[Rows], acc1[Rows];
  for (std::size_t r = 0; r < Rows; ++r) {
    acc0[r] = Lanes::load(c + r * ldc);
    acc1[r] = Lanes::load(c + r * ldc + kW);
  }
  for (std::size_t p = 0; p < kc; ++p) {
    const V b0 = Lanes::load(b + p * ldb);
    const V b1 = Lanes::load(b + p * ldb + kW);
    for (std::size_t r = 0; r < Rows; ++r) {
      const V av = Lanes::set1(a[r * lda + p]);
      acc0[r] = Lanes::fma(av, b0, acc0[r]);
      acc1[r] = Lanes::fma(av, b1, acc1[r]);
    }
  }
  for (std::size_t r = 0; r < Rows; ++r) {
    Lanes::store(c + r * ldc, acc0[r]);
    Lanes::store(c + r * ldc + kW, acc1[r]);
  }
}

template <std::size_t Rows>
void tile_nn_narrow(std::size_t kc, const Real* a, std::size_t lda, const Real* b, std::size_t ldb, Real* c,
                    std::size_t ldc) {
  V acc[Rows];
  for (std::size_t r = 0; r < Rows; ++r) acc[r] = Lanes::load(c + r * ldc);
  for (std::size_t p = 0; p < kc; ++p) {
    const V b0 = Lanes::load(b + p * ldb);
    for (std::size_t r = 0; r < Rows; ++r) acc[r] = Lanes::fma(Lanes::set1(a[r * lda + p]), b0, acc[r]);
  }
  for (std::size_t r = 0; r < Rows; ++r) Lanes::store(c + r * ldc, acc[r]);
}

template <std::size_t Rows>
void panel_nn(std::size_t n, std::size_t kc, const Real* a, std::size_t lda, const Real* b, std::size_t ldb,
              Real* c, std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 2 * kW <= n; j += 2 * kW) tile_nn<Rows>(kc, a, lda, b + j, ldb, c + j, ldc);
  for (; j + kW <= n; j += kW) tile_nn_narrow<Rows>(kc, a, lda, b + j, ldb, c + j, ldc);
  for (; j < n; ++j) {
    for (std::size_t r = 0; r < Rows; ++r) {
      Real acc = c[r * ldc + j];
      for (std::size_t p = 0; p < kc; ++p) acc += a[r * lda + p] * b[p * ldb + j];
      c[r * ldc + j] = acc;
    }
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda, const Real* b,
             std::size_t ldb, Real beta, Real* c, std::size_t ldc) {
  if (beta == Real(0)) {
    for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, Real(0));
  }
  for (std::size_t p0 = 0; p0 < k; p0 += kKc) {
    const std::size_t kc = std::min(kKc, k - p0);
    std::size_t i = 0;
    for (; i + kMr <= m; i += kMr) panel_nn<kMr>(n, kc, a + i * lda + p0, lda, b + p0 * ldb, ldb, c + i * ldc, ldc);
    for (; i < m; ++i) panel_nn<1>(n, kc, a + i * lda + p0, lda, b + p0 * ldb, ldb, c + i * ldc, ldc);
  }
}

// 2 rows of A against 4 rows of B, each accumulator vectorized along K.
// K is processed in chunks so both operand strips stay cache resident.
constexpr std::size_t kNtChunk = 2048;

void nt_chunk(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda, const Real* b,
              std::size_t ldb, Real* c, std::size_t ldc) {
  const std::size_t kv = k - k % kW;
  auto finish = [&](std::size_t i, std::size_t j, V acc) {
    Real s = Lanes::hsum(acc);
    for (std::size_t p = kv; p < k; ++p) s += a[i * lda + p] * b[j * ldb + p];
    c[i * ldc + j] += s;
  };
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const Real* a0 = a + i * lda;
    const Real* a1 = a0 + lda;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      V acc[2][4];
      for (auto& row : acc)
        for (auto& v : row) v = Lanes::zero();
      const Real* bp[4] = {b + j * ldb, b + (j + 1) * ldb, b + (j + 2) * ldb, b + (j + 3) * ldb};
      for (std::size_t p = 0; p < kv; p += kW) {
        const V x0 = Lanes::load(a0 + p);
        const V x1 = Lanes::load(a1 + p);
        for (int q = 0; q < 4; ++q) {
          const V y = Lanes::load(bp[q] + p);
          acc[0][q] = Lanes::fma(x0, y, acc[0][q]);
          acc[1][q] = Lanes::fma(x1, y, acc[1][q]);
        }
      }
      for (int q = 0; q < 4; ++q) {
        finish(i, j + q, acc[0][q]);
        finish(i + 1, j + q, acc[1][q]);
      }
    }
    for (; j < n; ++j) {
      V acc0 = Lanes::zero(), acc1 = Lanes::zero();
      const Real* bj = b + j * ldb;
      for (std::size_t p = 0; p < kv; p += kW) {
        const V y = Lanes::load(bj + p);
        acc0 = Lanes::fma(Lanes::load(a0 + p), y, acc0);
        acc1 = Lanes::fma(Lanes::load(a1 + p), y, acc1);
      }
      finish(i, j, acc0);
      finish(i + 1, j, acc1);
    }
  }
  for (; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      V acc = Lanes::zero();
      for (std::size_t p = 0; p < kv; p += kW)
        acc = Lanes::fma(Lanes::load(a + i * lda + p), Lanes::load(b + j * ldb + p), acc);
      finish(i, j, acc);
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda, const Real* b,
             std::size_t ldb, Real beta, Real* c, std::size_t ldc) {
  if (beta == Real(0)) {
    for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, Real(0));
  }
  for (std::size_t p0 = 0; p0 < k; p0 += kNtChunk) {
    nt_chunk(m, n, std::min(kNtChunk, k - p0), a + p0, lda, b + p0, ldb, c, ldc);
  }
}

void axpy(std::size_t n, Real alpha, const Real* x, Real* y) {
  const V av = Lanes::set1(alpha);
  std::size_t i = 0;
  for (; i + kW <= n; i += kW) Lanes::store(y + i, Lanes::fma(av, Lanes::load(x + i), Lanes::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

Real dot(std::size_t n, const Real* x, const Real* y) {
  V acc0 = Lanes::zero(), acc1 = Lanes::zero();
  std::size_t i = 0;
  for (; i + 2 * kW <= n; i += 2 * kW) {
    acc0 = Lanes::fma(Lanes::load(x + i), Lanes::load(y + i), acc0);
    acc1 = Lanes::fma(Lanes::load(x + i + kW), Lanes::load(y + i + kW), acc1);
  }
  for (; i + kW <= n; i += kW) acc0 = Lanes::fma(Lanes::load(x + i), Lanes::load(y + i), acc0);
  Real s = Lanes::hsum(Lanes::add(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

// mul+mul+add without contraction so results match the scalar reference bitwise.
void lerp(std::size_t n, Real lambda, const Real* x, const Real* u, Real* out) {
  const Real rest = Real(1) - lambda;
  const V lv = Lanes::set1(lambda);
  const V rv = Lanes::set1(rest);
  std::size_t i = 0;
  for (; i + kW <= n; i += kW) {
    const V xv = Lanes::load(x + i);
    const V uv = Lanes::load(u + i);
    const V v = Lanes::add(Lanes::mul(lv, xv), Lanes::mul(rv, uv));
    Lanes::store(out + i, Lanes::min(Lanes::max(v, Lanes::min(xv, uv)), Lanes::max(xv, uv)));
  }
  for (; i < n; ++i) {
    const Real v = lambda * x[i] + rest * u[i];
    out[i] = std::clamp(v, std::min(x[i], u[i]), std::max(x[i], u[i]));
  }
}

void sgd_momentum(std::size_t n, Real lr, Real momentum, Real weight_decay, Real* w, const Real* grad,
                  Real* buf) {
  const V lrv = Lanes::set1(lr), mv = Lanes::set1(momentum), wdv = Lanes::set1(weight_decay);
  std::size_t i = 0;
  for (; i + kW <= n; i += kW) {
    const V wv = Lanes::load(w + i);
    const V g = Lanes::add(Lanes::load(grad + i), Lanes::mul(wdv, wv));
    const V bv = Lanes::add(Lanes::mul(mv, Lanes::load(buf + i)), g);
    Lanes::store(buf + i, bv);
    Lanes::store(w + i, Lanes::sub(wv, Lanes::mul(lrv, bv)));
  }
  for (; i < n; ++i) {
    const Real g = grad[i] + weight_decay * w[i];
    buf[i] = momentum * buf[i] + g;
    w[i] -= lr * buf[i];
  }
}

}  // namespace

std::optional<KernelTable> avx2() {
  __builtin_cpu_init();
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return std::nullopt;
  return KernelTable{"avx2", gemm_nn, gemm_nt, axpy, dot, lerp, sgd_momentum};
}

}  // namespace vidmatch::kernels

#else

namespace vidmatch::kernels {
std::optional<KernelTable> avx2() { return std::nullopt; }
}  // namespace vidmatch::kernels

#endif
