#include "zsicl/simd/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace zsicl::simd {
namespace {

bool avx2_usable() {
#if defined(ZSICL_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &detail::kScalarKernels;
    case Backend::avx2:
#if defined(ZSICL_HAVE_AVX2_TU)
      if (avx2_usable()) return &detail::kAvx2Kernels;
#endif
      return nullptr;
    case Backend::neon:
#if defined(ZSICL_HAVE_NEON_TU)
      return &detail::kNeonKernels;  // NEON is baseline on aarch64
#endif
      return nullptr;
  }
  return nullptr;
}

Backend pick_backend() {
  if (const char* env = std::getenv("ZSICL_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Backend::scalar;
    if (want == "avx2" && table_for(Backend::avx2)) return Backend::avx2;
    if (want == "neon" && table_for(Backend::neon)) return Backend::neon;
    return Backend::scalar;  // unknown or unavailable request
  }
  if (table_for(Backend::avx2)) return Backend::avx2;
  if (table_for(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

struct Dispatch {
  Backend backend = pick_backend();
  const KernelTable* table = table_for(backend);
};

const Dispatch& dispatch() {
  static const Dispatch d;
  return d;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

const KernelTable& kernels() { return *dispatch().table; }

Backend active_backend() { return dispatch().backend; }

const KernelTable* kernels_for(Backend b) { return table_for(b); }

double norm(std::span<const double> v) {
  return std::sqrt(kernels().squared_norm(v.data(), v.size()));
}

void l2_normalize(std::span<double> v) {
  const double n = norm(v);
  if (!(n > 0.0)) {
    throw std::invalid_argument("l2_normalize: zero vector");
  }
  kernels().scale(v.data(), v.size(), 1.0 / n);
}

}  // namespace zsicl::simd
