#pragma once
#include <cstddef>

// Double-precision compute kernels behind a runtime-dispatched table.
// Matrices are row-major. The scalar table is the reference semantics;
// vector backends may reassociate reductions, so cross-backend results
// agree only to rounding. Within one backend everything is deterministic.

namespace cassi::kern {

struct Ops {
  const char* name;

  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a*x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  void (*scal)(double a, double* x, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*maxv)(const double* x, std::size_t n);

  // y = W x, W is rows x cols
  void (*matvec)(const double* W, const double* x, double* y, std::size_t rows, std::size_t cols);
  // y = W^T x, x has rows entries, y has cols
  void (*matvec_t)(const double* W, const double* x, double* y, std::size_t rows, std::size_t cols);
  // W += x y^T
  void (*ger)(double* W, const double* x, const double* y, std::size_t rows, std::size_t cols);

  // C (M x N) += A (M x K) * B^T, B is N x K: C[m][n] += dot(A[m], B[n])
  void (*gemm_nt)(double* C, const double* A, const double* B, std::size_t M, std::size_t N, std::size_t K);
  // C (M x N) += A (M x K) * B, B is K x N: row-wise axpy accumulation
  void (*gemm_nn)(double* C, const double* A, const double* B, std::size_t M, std::size_t N, std::size_t K);
  // C (M x N) += A^T * B, A is K x M, B is K x N: rank-1 per shared row
  void (*gemm_tn)(double* C, const double* A, const double* B, std::size_t M, std::size_t N, std::size_t K);

  // activations: a = pre-activation, h = output, d = sigma'(a), s = sigma''(a)
  void (*elu)(const double* a, double* h, std::size_t n);
  void (*elu_d)(const double* a, double* d, std::size_t n);
  void (*elu_dd)(const double* a, double* s, std::size_t n);
  void (*relu)(const double* a, double* h, std::size_t n);
  void (*relu_d)(const double* a, double* d, std::size_t n);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when the CPU or build lacks AVX2+FMA

// Selected once at first use: CASSI_KERNELS=scalar|avx2 overrides, default
// is the widest supported backend.
const Ops& ops();

}  // namespace cassi::kern
