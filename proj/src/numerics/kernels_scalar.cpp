#include "gait/numerics/kernels.hpp"

namespace gait::kernels::scalar {

template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
             const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * ldc;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = Real(0);
    }
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = a[i * lda + p];
      const Real* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
             const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * lda + p] * b[j * ldb + p];
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + acc : acc;
    }
  }
}

template <typename Real>
void axpy(std::size_t n, Real alpha, const Real* x, Real* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename Real>
Real dot(std::size_t n, const Real* x, const Real* y) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

#define GAIT_INSTANTIATE(Real)                                                                   \
  template void gemm_nn<Real>(std::size_t, std::size_t, std::size_t, const Real*, std::size_t,    \
                              const Real*, std::size_t, Real*, std::size_t, bool);               \
  template void gemm_nt<Real>(std::size_t, std::size_t, std::size_t, const Real*, std::size_t,    \
                              const Real*, std::size_t, Real*, std::size_t, bool);               \
  template void axpy<Real>(std::size_t, Real, const Real*, Real*);                                \
  template Real dot<Real>(std::size_t, const Real*, const Real*);

GAIT_INSTANTIATE(float)
GAIT_INSTANTIATE(double)
#undef GAIT_INSTANTIATE

}  // namespace gait::kernels::scalar
