#include "cassi/kernels.hpp"

#include <cmath>

namespace cassi::kern {
namespace {

double dot_s(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_s(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_s(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sum_s(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double maxv_s(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void matvec_s(const double* W, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_s(W + r * cols, x, cols);
}

void matvec_t_s(const double* W, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_s(x[r], W + r * cols, y, cols);
}

void ger_s(double* W, const double* x, const double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_s(x[r], y, W + r * cols, cols);
}

void gemm_nt_s(double* C, const double* A, const double* B, std::size_t M, std::size_t N, std::size_t K) {
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n) C[m * N + n] += dot_s(A + m * K, B + n * K, K);
}

void gemm_nn_s(double* C, const double* A, const double* B, std::size_t M, std::size_t N, std::size_t K) {
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < K; ++k) axpy_s(A[m * K + k], B + k * N, C + m * N, N);
}

void gemm_tn_s(double* C, const double* A, const double* B, std::size_t M, std::size_t N, std::size_t K) {
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t m = 0; m < M; ++m) axpy_s(A[k * M + m], B + k * N, C + m * N, N);
}

void elu_s(const double* a, double* h, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) h[i] = a[i] > 0.0 ? a[i] : std::expm1(a[i]);
}

void elu_d_s(const double* a, double* d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] > 0.0 ? 1.0 : std::exp(a[i]);
}

void elu_dd_s(const double* a, double* s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) s[i] = a[i] > 0.0 ? 0.0 : std::exp(a[i]);
}

void relu_s(const double* a, double* h, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) h[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_d_s(const double* a, double* d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] > 0.0 ? 1.0 : 0.0;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table{
      "scalar", dot_s,     axpy_s,   scal_s,    sum_s,  maxv_s,   matvec_s,
      matvec_t_s, ger_s,   gemm_nt_s, gemm_nn_s, gemm_tn_s,
      elu_s,    elu_d_s,   elu_dd_s, relu_s,    relu_d_s,
  };
  return table;
}

}  // namespace cassi::kern
