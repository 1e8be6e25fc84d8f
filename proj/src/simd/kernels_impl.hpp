#pragma once

// Internal: per-variant kernel tables, linked from the dispatch unit.

#include "zsicl/simd/kernels.hpp"

namespace zsicl::simd::detail {

extern const KernelTable kScalarKernels;

#if defined(ZSICL_HAVE_AVX2_TU)
extern const KernelTable kAvx2Kernels;
#endif
#if defined(ZSICL_HAVE_NEON_TU)
extern const KernelTable kNeonKernels;
#endif

}  // namespace zsicl::simd::detail
