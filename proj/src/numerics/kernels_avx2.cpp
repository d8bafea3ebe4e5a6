// Compiled with -mavx2 -mfma. Keep standard-library templates out of this
// translation unit: their AVX-encoded instantiations could otherwise be picked
// by the linker for callers running on CPUs without AVX2.

#include <immintrin.h>

#include "gait/numerics/kernels.hpp"

namespace gait::kernels::avx2 {
namespace {

struct F32 {
  using Real = float;
  using Vec = __m256;
  static constexpr std::size_t kWidth = 8;
  static Vec zero() { return _mm256_setzero_ps(); }
  static Vec set1(Real v) { return _mm256_set1_ps(v); }
  static Vec load(const Real* p) { return _mm256_loadu_ps(p); }
  static void store(Real* p, Vec v) { _mm256_storeu_ps(p, v); }
  static Vec add(Vec a, Vec b) { return _mm256_add_ps(a, b); }
  static Vec fma(Vec a, Vec b, Vec c) { return _mm256_fmadd_ps(a, b, c); }
  static Real hsum(Vec v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

struct F64 {
  using Real = double;
  using Vec = __m256d;
  static constexpr std::size_t kWidth = 4;
  static Vec zero() { return _mm256_setzero_pd(); }
  static Vec set1(Real v) { return _mm256_set1_pd(v); }
  static Vec load(const Real* p) { return _mm256_loadu_pd(p); }
  static void store(Real* p, Vec v) { _mm256_storeu_pd(p, v); }
  static Vec add(Vec a, Vec b) { return _mm256_add_pd(a, b); }
  static Vec fma(Vec a, Vec b, Vec c) { return _mm256_fmadd_pd(a, b, c); }
  static Real hsum(Vec v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

// Register block of kRows x (2 * width) outputs; the k loop stays innermost
// so every B row segment is loaded once per block.
template <typename T, std::size_t kRows>
inline void gemm_nn_block(std::size_t n_begin, std::size_t n_end, std::size_t k,
                          const typename T::Real* a, std::size_t lda, const typename T::Real* b,
                          std::size_t ldb, typename T::Real* c, std::size_t ldc, bool accumulate) {
  using Real = typename T::Real;
  using Vec = typename T::Vec;
  constexpr std::size_t w = T::kWidth;
  std::size_t j = n_begin;
  for (; j + 2 * w <= n_end; j += 2 * w) {
    Vec acc0[kRows];
    Vec acc1[kRows];
    for (std::size_t r = 0; r < kRows; ++r) {
      acc0[r] = T::zero();
      acc1[r] = T::zero();
    }
    for (std::size_t p = 0; p < k; ++p) {
      const Vec b0 = T::load(b + p * ldb + j);
      const Vec b1 = T::load(b + p * ldb + j + w);
      for (std::size_t r = 0; r < kRows; ++r) {
        const Vec av = T::set1(a[r * lda + p]);
        acc0[r] = T::fma(av, b0, acc0[r]);
        acc1[r] = T::fma(av, b1, acc1[r]);
      }
    }
    for (std::size_t r = 0; r < kRows; ++r) {
      Real* crow = c + r * ldc + j;
      if (accumulate) {
        acc0[r] = T::add(acc0[r], T::load(crow));
        acc1[r] = T::add(acc1[r], T::load(crow + w));
      }
      T::store(crow, acc0[r]);
      T::store(crow + w, acc1[r]);
    }
  }
  for (; j + w <= n_end; j += w) {
    Vec acc[kRows];
    for (std::size_t r = 0; r < kRows; ++r) acc[r] = T::zero();
    for (std::size_t p = 0; p < k; ++p) {
      const Vec bv = T::load(b + p * ldb + j);
      for (std::size_t r = 0; r < kRows; ++r) acc[r] = T::fma(T::set1(a[r * lda + p]), bv, acc[r]);
    }
    for (std::size_t r = 0; r < kRows; ++r) {
      Real* crow = c + r * ldc + j;
      if (accumulate) acc[r] = T::add(acc[r], T::load(crow));
      T::store(crow, acc[r]);
    }
  }
  for (; j < n_end; ++j) {
    for (std::size_t r = 0; r < kRows; ++r) {
      Real s = 0;
      for (std::size_t p = 0; p < k; ++p) s += a[r * lda + p] * b[p * ldb + j];
      c[r * ldc + j] = accumulate ? c[r * ldc + j] + s : s;
    }
  }
}

template <typename T>
void gemm_nn_impl(std::size_t m, std::size_t n, std::size_t k, const typename T::Real* a,
                  std::size_t lda, const typename T::Real* b, std::size_t ldb,
                  typename T::Real* c, std::size_t ldc, bool accumulate) {
  // Column panels keep the C block and the touched B rows cache resident.
  constexpr std::size_t kPanel = 256;
  for (std::size_t j0 = 0; j0 < n; j0 += kPanel) {
    const std::size_t j1 = j0 + kPanel < n ? j0 + kPanel : n;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      gemm_nn_block<T, 4>(j0, j1, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
    }
    for (; i < m; ++i) {
      gemm_nn_block<T, 1>(j0, j1, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
    }
  }
}

template <typename T>
typename T::Real dot_impl(std::size_t n, const typename T::Real* x, const typename T::Real* y) {
  using Real = typename T::Real;
  using Vec = typename T::Vec;
  constexpr std::size_t w = T::kWidth;
  Vec acc0 = T::zero();
  Vec acc1 = T::zero();
  std::size_t i = 0;
  for (; i + 2 * w <= n; i += 2 * w) {
    acc0 = T::fma(T::load(x + i), T::load(y + i), acc0);
    acc1 = T::fma(T::load(x + i + w), T::load(y + i + w), acc1);
  }
  for (; i + w <= n; i += w) acc0 = T::fma(T::load(x + i), T::load(y + i), acc0);
  Real s = T::hsum(T::add(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

// kRows x 4 dot products; each loaded A and B segment feeds several FMAs.
template <typename T, std::size_t kRows>
inline void gemm_nt_rows(std::size_t n, std::size_t k, const typename T::Real* a, std::size_t lda,
                         const typename T::Real* b, std::size_t ldb, typename T::Real* c,
                         std::size_t ldc, bool accumulate) {
  using Real = typename T::Real;
  using Vec = typename T::Vec;
  constexpr std::size_t w = T::kWidth;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    Vec s[kRows][4];
    for (std::size_t r = 0; r < kRows; ++r) {
      for (std::size_t q = 0; q < 4; ++q) s[r][q] = T::zero();
    }
    std::size_t p = 0;
    for (; p + w <= k; p += w) {
      Vec bv[4];
      for (std::size_t q = 0; q < 4; ++q) bv[q] = T::load(b + (j + q) * ldb + p);
      for (std::size_t r = 0; r < kRows; ++r) {
        const Vec av = T::load(a + r * lda + p);
        for (std::size_t q = 0; q < 4; ++q) s[r][q] = T::fma(av, bv[q], s[r][q]);
      }
    }
    for (std::size_t r = 0; r < kRows; ++r) {
      const Real* arow = a + r * lda;
      Real* crow = c + r * ldc;
      for (std::size_t q = 0; q < 4; ++q) {
        const Real* brow = b + (j + q) * ldb;
        Real v = T::hsum(s[r][q]);
        for (std::size_t t = p; t < k; ++t) v += arow[t] * brow[t];
        crow[j + q] = accumulate ? crow[j + q] + v : v;
      }
    }
  }
  for (; j < n; ++j) {
    for (std::size_t r = 0; r < kRows; ++r) {
      const Real v = dot_impl<T>(k, a + r * lda, b + j * ldb);
      c[r * ldc + j] = accumulate ? c[r * ldc + j] + v : v;
    }
  }
}

template <typename T>
void gemm_nt_impl(std::size_t m, std::size_t n, std::size_t k, const typename T::Real* a,
                  std::size_t lda, const typename T::Real* b, std::size_t ldb,
                  typename T::Real* c, std::size_t ldc, bool accumulate) {
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    gemm_nt_rows<T, 2>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
  }
  for (; i < m; ++i) gemm_nt_rows<T, 1>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
}

template <typename T>
void axpy_impl(std::size_t n, typename T::Real alpha, const typename T::Real* x,
               typename T::Real* y) {
  using Vec = typename T::Vec;
  constexpr std::size_t w = T::kWidth;
  const Vec av = T::set1(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) T::store(y + i, T::fma(av, T::load(x + i), T::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  gemm_nn_impl<F32>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  gemm_nn_impl<F64>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  gemm_nt_impl<F32>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  gemm_nt_impl<F64>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
void axpy(std::size_t n, float alpha, const float* x, float* y) { axpy_impl<F32>(n, alpha, x, y); }
void axpy(std::size_t n, double alpha, const double* x, double* y) {
  axpy_impl<F64>(n, alpha, x, y);
}
float dot(std::size_t n, const float* x, const float* y) { return dot_impl<F32>(n, x, y); }
double dot(std::size_t n, const double* x, const double* y) { return dot_impl<F64>(n, x, y); }

}  // namespace gait::kernels::avx2
