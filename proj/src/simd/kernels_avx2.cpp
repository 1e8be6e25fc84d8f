// AVX2+FMA variants. This file is compiled with -mavx2 -mfma; the dispatcher
// only installs the table when the CPU reports both features.

#include "kernels_impl.hpp"

#if defined(ZSICL_HAVE_AVX2_TU)

#include <immintrin.h>

namespace zsicl::simd::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void batch_dot_avx2(const double* query, const double* rows, std::size_t n_rows,
                    std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    out[r] = dot_avx2(query, rows + r * dim, dim);
  }
}

double squared_norm_avx2(const double* v, std::size_t n) {
  return dot_avx2(v, v, n);
}

void scale_avx2(double* v, std::size_t n, double s) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(v + i, _mm256_mul_pd(_mm256_loadu_pd(v + i), vs));
  }
  for (; i < n; ++i) v[i] *= s;
}

}  // namespace

const KernelTable kAvx2Kernels = {
    dot_avx2,
    batch_dot_avx2,
    squared_norm_avx2,
    scale_avx2,
};

}  // namespace zsicl::simd::detail

#endif  // ZSICL_HAVE_AVX2_TU
