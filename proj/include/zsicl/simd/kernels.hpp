#pragma once

/**
 * Vector kernels for embedding math (dot products, norms, batched cosine
 * scoring). A scalar reference implementation always exists; AVX2 (x86-64)
 * and NEON (aarch64) variants are compiled into their own translation units
 * and selected at runtime from CPU capabilities.
 *
 * The environment variable ZSICL_SIMD=scalar|avx2|neon forces a backend
 * (falling back to scalar when the requested one is unavailable), which the
 * equivalence tests use to compare variants on identical inputs.
 */

#include <cstddef>
#include <span>
#include <string_view>

namespace zsicl::simd {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[i] = dot(query, rows + i*dim) for i in [0, n_rows)
  void (*batch_dot)(const double* query, const double* rows, std::size_t n_rows,
                    std::size_t dim, double* out);
  double (*squared_norm)(const double* v, std::size_t n);
  void (*scale)(double* v, std::size_t n, double s);
};

// Runtime-selected table (honors ZSICL_SIMD on first use).
const KernelTable& kernels();
Backend active_backend();

// Specific variant, or nullptr when this host cannot run it.
const KernelTable* kernels_for(Backend b);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

double norm(std::span<const double> v);

// Scales v to unit L2 norm. Throws std::invalid_argument on a zero vector.
void l2_normalize(std::span<double> v);

}  // namespace zsicl::simd
