#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "gait/numerics/kernels.hpp"

namespace gait::kernels {
namespace {

Backend detect() {
  if (const char* env = std::getenv("GAIT_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return Backend::Scalar;
  }
  return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& selected() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

bool avx2_supported() {
#if defined(GAIT_HAVE_AVX2_KERNELS)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported;
#else
  return false;
#endif
}

Backend active_backend() { return selected().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (backend == Backend::Avx2 && !avx2_supported()) {
    throw std::runtime_error("AVX2 kernels requested but not supported by this CPU");
  }
  selected().store(backend, std::memory_order_relaxed);
}

const char* backend_name(Backend backend) { return backend == Backend::Avx2 ? "avx2" : "scalar"; }

#if defined(GAIT_HAVE_AVX2_KERNELS)
#define GAIT_DISPATCH(call_avx2, call_scalar) \
  if (active_backend() == Backend::Avx2) {    \
    return call_avx2;                         \
  }                                           \
  return call_scalar
#else
#define GAIT_DISPATCH(call_avx2, call_scalar) return call_scalar
#endif

template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
             const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate) {
  GAIT_DISPATCH(avx2::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc, accumulate),
                scalar::gemm_nn<Real>(m, n, k, a, lda, b, ldb, c, ldc, accumulate));
}

template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
             const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate) {
  GAIT_DISPATCH(avx2::gemm_nt(m, n, k, a, lda, b, ldb, c, ldc, accumulate),
                scalar::gemm_nt<Real>(m, n, k, a, lda, b, ldb, c, ldc, accumulate));
}

template <typename Real>
void axpy(std::size_t n, Real alpha, const Real* x, Real* y) {
  GAIT_DISPATCH(avx2::axpy(n, alpha, x, y), scalar::axpy<Real>(n, alpha, x, y));
}

template <typename Real>
Real dot(std::size_t n, const Real* x, const Real* y) {
  GAIT_DISPATCH(avx2::dot(n, x, y), scalar::dot<Real>(n, x, y));
}

#undef GAIT_DISPATCH

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

}  // namespace gait::kernels
