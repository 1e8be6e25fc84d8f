// NEON variants (aarch64, where float64x2 is baseline).

#include "kernels_impl.hpp"

#if defined(ZSICL_HAVE_NEON_TU)

#include <arm_neon.h>

namespace zsicl::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void batch_dot_neon(const double* query, const double* rows, std::size_t n_rows,
                    std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    out[r] = dot_neon(query, rows + r * dim, dim);
  }
}

double squared_norm_neon(const double* v, std::size_t n) {
  return dot_neon(v, v, n);
}

void scale_neon(double* v, std::size_t n, double s) {
  const float64x2_t vs = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(v + i, vmulq_f64(vld1q_f64(v + i), vs));
  }
  for (; i < n; ++i) v[i] *= s;
}

}  // namespace

const KernelTable kNeonKernels = {
    dot_neon,
    batch_dot_neon,
    squared_norm_neon,
    scale_neon,
};

}  // namespace zsicl::simd::detail

#endif  // ZSICL_HAVE_NEON_TU
