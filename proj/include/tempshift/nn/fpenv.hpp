#pragma once

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace tempshift::nn {

// Subnormal floats stall SIMD units once weights and gradients shrink; the
// calling thread treats them as zero from here on.
inline void flush_denormals() {
#if defined(__SSE__)
    _mm_setcsr(_mm_getcsr() | 0x8040);
#endif
}

}  // namespace tempshift::nn
