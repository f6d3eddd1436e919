#include "lata/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace lata::simd::avx2 {

namespace {

// lo holds lanes 0..3, hi holds lanes 4..7.
__attribute__((target("avx2"))) inline double fold(__m256d lo, __m256d hi) noexcept {
  alignas(32) double l[8];
  _mm256_store_pd(l, lo);
  _mm256_store_pd(l + 4, hi);
  return ((l[0] + l[4]) + (l[1] + l[5])) + ((l[2] + l[6]) + (l[3] + l[7]));
}

}  // namespace

__attribute__((target("avx2"))) double dot(const float* a, const float* b, std::size_t n) noexcept {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256 va = _mm256_loadu_ps(a + j);
    const __m256 vb = _mm256_loadu_ps(b + j);
    const __m256d a_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
    const __m256d a_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
    const __m256d b_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
    const __m256d b_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
    lo = _mm256_add_pd(lo, _mm256_mul_pd(a_lo, b_lo));
    hi = _mm256_add_pd(hi, _mm256_mul_pd(a_hi, b_hi));
  }
  alignas(32) double l[8];
  _mm256_store_pd(l, lo);
  _mm256_store_pd(l + 4, hi);
  for (std::size_t t = 0; j < n; ++j, ++t) {
    l[t] += static_cast<double>(a[j]) * static_cast<double>(b[j]);
  }
  return fold(_mm256_load_pd(l), _mm256_load_pd(l + 4));
}

__attribute__((target("avx2"))) double squared_distance(const float* a, const float* b,
                                                        std::size_t n) noexcept {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256 va = _mm256_loadu_ps(a + j);
    const __m256 vb = _mm256_loadu_ps(b + j);
    const __m256d d_lo = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                                       _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
    const __m256d d_hi = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                                       _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
    lo = _mm256_add_pd(lo, _mm256_mul_pd(d_lo, d_lo));
    hi = _mm256_add_pd(hi, _mm256_mul_pd(d_hi, d_hi));
  }
  alignas(32) double l[8];
  _mm256_store_pd(l, lo);
  _mm256_store_pd(l + 4, hi);
  for (std::size_t t = 0; j < n; ++j, ++t) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    l[t] += diff * diff;
  }
  return fold(_mm256_load_pd(l), _mm256_load_pd(l + 4));
}

}  // namespace lata::simd::avx2

#endif
