#include "kernels_impl.hpp"

namespace zsicl::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void batch_dot_scalar(const double* query, const double* rows, std::size_t n_rows,
                      std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    out[r] = dot_scalar(query, rows + r * dim, dim);
  }
}

double squared_norm_scalar(const double* v, std::size_t n) {
  return dot_scalar(v, v, n);
}

void scale_scalar(double* v, std::size_t n, double s) {
  for (std::size_t i = 0; i < n; ++i) v[i] *= s;
}

}  // namespace

const KernelTable kScalarKernels = {
    dot_scalar,
    batch_dot_scalar,
    squared_norm_scalar,
    scale_scalar,
};

}  // namespace zsicl::simd::detail
