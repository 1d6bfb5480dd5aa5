#ifndef CASSI_NO_AVX2_TU
#include "cassi/kernels.hpp"

#include <immintrin.h>

#include <cmath>

// AVX2+FMA backend. This TU is compiled with -mavx2 -mfma; nothing here runs
// unless the dispatcher confirmed CPU support first.

namespace cassi::kern {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_v(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
  }
  for (; i + 4 <= n; i += 4)
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_v(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal_v(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

double sum_v(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
  double acc = hsum(a0);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double maxv_v(const double* x, std::size_t n) {
  double m = x[0];
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    double lane[4];
    _mm256_storeu_pd(lane, vm);
    m = lane[0];
    for (int k = 1; k < 4; ++k)
      if (lane[k] > m) m = lane[k];
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void matvec_v(const double* W, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_v(W + r * cols, x, cols);
}

void matvec_t_v(const double* W, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_v(x[r], W + r * cols, y, cols);
}

void ger_v(double* W, const double* x, const double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_v(x[r], y, W + r * cols, cols);
}

// 4x2 register tile of dot products; A rows stay in registers across the
// B-row pair, K-loop streams both operands once per tile.
void gemm_nt_v(double* C, const double* A, const double* B, std::size_t M, std::size_t N, std::size_t K) {
  std::size_t m = 0;
  for (; m + 4 <= M; m += 4) {
    const double* a0 = A + (m + 0) * K;
    const double* a1 = A + (m + 1) * K;
    const double* a2 = A + (m + 2) * K;
    const double* a3 = A + (m + 3) * K;
    std::size_t n = 0;
    for (; n + 2 <= N; n += 2) {
      const double* b0 = B + (n + 0) * K;
      const double* b1 = B + (n + 1) * K;
      __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
      __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
      __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
      __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
      std::size_t k = 0;
      for (; k + 4 <= K; k += 4) {
        const __m256d vb0 = _mm256_loadu_pd(b0 + k);
        const __m256d vb1 = _mm256_loadu_pd(b1 + k);
        const __m256d va0 = _mm256_loadu_pd(a0 + k);
        const __m256d va1 = _mm256_loadu_pd(a1 + k);
        const __m256d va2 = _mm256_loadu_pd(a2 + k);
        const __m256d va3 = _mm256_loadu_pd(a3 + k);
        c00 = _mm256_fmadd_pd(va0, vb0, c00);
        c01 = _mm256_fmadd_pd(va0, vb1, c01);
        c10 = _mm256_fmadd_pd(va1, vb0, c10);
        c11 = _mm256_fmadd_pd(va1, vb1, c11);
        c20 = _mm256_fmadd_pd(va2, vb0, c20);
        c21 = _mm256_fmadd_pd(va2, vb1, c21);
        c30 = _mm256_fmadd_pd(va3, vb0, c30);
        c31 = _mm256_fmadd_pd(va3, vb1, c31);
      }
      double t00 = hsum(c00), t01 = hsum(c01), t10 = hsum(c10), t11 = hsum(c11);
      double t20 = hsum(c20), t21 = hsum(c21), t30 = hsum(c30), t31 = hsum(c31);
      for (; k < K; ++k) {
        t00 += a0[k] * b0[k];
        t01 += a0[k] * b1[k];
        t10 += a1[k] * b0[k];
        t11 += a1[k] * b1[k];
        t20 += a2[k] * b0[k];
        t21 += a2[k] * b1[k];
        t30 += a3[k] * b0[k];
        t31 += a3[k] * b1[k];
      }
      C[(m + 0) * N + n] += t00;
      C[(m + 0) * N + n + 1] += t01;
      C[(m + 1) * N + n] += t10;
      C[(m + 1) * N + n + 1] += t11;
      C[(m + 2) * N + n] += t20;
      C[(m + 2) * N + n + 1] += t21;
      C[(m + 3) * N + n] += t30;
      C[(m + 3) * N + n + 1] += t31;
    }
    for (; n < N; ++n) {
      const double* b0 = B + n * K;
      C[(m + 0) * N + n] += dot_v(a0, b0, K);
      C[(m + 1) * N + n] += dot_v(a1, b0, K);
      C[(m + 2) * N + n] += dot_v(a2, b0, K);
      C[(m + 3) * N + n] += dot_v(a3, b0, K);
    }
  }
  for (; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n) C[m * N + n] += dot_v(A + m * K, B + n * K, K);
}

void gemm_nn_v(double* C, const double* A, const double* B, std::size_t M, std::size_t N, std::size_t K) {
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < K; ++k) axpy_v(A[m * K + k], B + k * N, C + m * N, N);
}

void gemm_tn_v(double* C, const double* A, const double* B, std::size_t M, std::size_t N, std::size_t K) {
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t m = 0; m < M; ++m) axpy_v(A[k * M + m], B + k * N, C + m * N, N);
}

void elu_v(const double* a, double* h, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) h[i] = a[i] > 0.0 ? a[i] : std::expm1(a[i]);
}

void elu_d_v(const double* a, double* d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] > 0.0 ? 1.0 : std::exp(a[i]);
}

void elu_dd_v(const double* a, double* s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) s[i] = a[i] > 0.0 ? 0.0 : std::exp(a[i]);
}

void relu_v(const double* a, double* h, std::size_t n) {
  const __m256d z = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(h + i, _mm256_max_pd(z, _mm256_loadu_pd(a + i)));
  for (; i < n; ++i) h[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_d_v(const double* a, double* d, std::size_t n) {
  const __m256d z = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(a + i), z, _CMP_GT_OQ);
    _mm256_storeu_pd(d + i, _mm256_and_pd(mask, one));
  }
  for (; i < n; ++i) d[i] = a[i] > 0.0 ? 1.0 : 0.0;
}

}  // namespace

const Ops* avx2_ops() {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
  static const Ops table{
      "avx2",   dot_v,     axpy_v,   scal_v,    sum_v,  maxv_v,   matvec_v,
      matvec_t_v, ger_v,   gemm_nt_v, gemm_nn_v, gemm_tn_v,
      elu_v,    elu_d_v,   elu_dd_v, relu_v,    relu_d_v,
  };
  return &table;
}

}  // namespace cassi::kern

#else
#include "cassi/kernels.hpp"
namespace cassi::kern {
const Ops* avx2_ops() { return nullptr; }
}  // namespace cassi::kern
#endif
