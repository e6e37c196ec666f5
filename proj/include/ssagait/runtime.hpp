#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif
#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace ssagait {

/// Process-wide tuning for training workloads, called once from entry points.
///
/// Raises the heap's mmap and trim thresholds and flushes subnormal floats
/// to zero on the calling thread.
inline void configure_runtime() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
#if defined(__SSE__)
  _mm_setcsr(_mm_getcsr() | 0x8040);  // FTZ | DAZ
#endif
}

}  // namespace ssagait
