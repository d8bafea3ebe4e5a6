#pragma once

// Dense inner loops used by the convolution, linear and pooling ops.
//
// Every kernel has a scalar reference implementation (namespace `scalar`)
// and an AVX2+FMA variant (namespace `avx2`). The public entry points in
// `gait::kernels` forward to whichever backend was selected at runtime.
// Matrices are row-major with explicit leading dimensions.

#include <cstddef>

namespace gait::kernels {

enum class Backend { Scalar, Avx2 };

/// True when the running CPU reports AVX2 and FMA.
bool avx2_supported();

/// Backend chosen on first use: AVX2 when supported, unless the environment
/// variable GAIT_SIMD is set to "scalar".
Backend active_backend();

/// Overrides the runtime choice. Requesting Avx2 on a CPU without it throws.
void set_backend(Backend backend);

const char* backend_name(Backend backend);

// C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n]
template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
             const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate);

// C[m x n] = (accumulate ? C : 0) + A[m x k] * B[n x k]^T
template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
             const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate);

// y += alpha * x
template <typename Real>
void axpy(std::size_t n, Real alpha, const Real* x, Real* y);

template <typename Real>
Real dot(std::size_t n, const Real* x, const Real* y);

namespace scalar {

template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
             const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate);
template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
             const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate);
template <typename Real>
void axpy(std::size_t n, Real alpha, const Real* x, Real* y);
template <typename Real>
Real dot(std::size_t n, const Real* x, const Real* y);

}  // namespace scalar

namespace avx2 {

// Only callable when avx2_supported() is true.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);
void axpy(std::size_t n, float alpha, const float* x, float* y);
void axpy(std::size_t n, double alpha, const double* x, double* y);
float dot(std::size_t n, const float* x, const float* y);
double dot(std::size_t n, const double* x, const double* y);

}  // namespace avx2

}  // namespace gait::kernels
