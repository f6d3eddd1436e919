#include "lata/simd.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace lata::simd::neon {

// Four float64x2 accumulators cover lanes {0,1}, {2,3}, {4,5}, {6,7}.

double dot(const float* a, const float* b, std::size_t n) noexcept {
  float64x2_t acc[4] = {vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0)};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const float32x4_t a0 = vld1q_f32(a + j);
    const float32x4_t a1 = vld1q_f32(a + j + 4);
    const float32x4_t b0 = vld1q_f32(b + j);
    const float32x4_t b1 = vld1q_f32(b + j + 4);
    acc[0] = vaddq_f64(acc[0], vmulq_f64(vcvt_f64_f32(vget_low_f32(a0)), vcvt_f64_f32(vget_low_f32(b0))));
    acc[1] = vaddq_f64(acc[1], vmulq_f64(vcvt_high_f64_f32(a0), vcvt_high_f64_f32(b0)));
    acc[2] = vaddq_f64(acc[2], vmulq_f64(vcvt_f64_f32(vget_low_f32(a1)), vcvt_f64_f32(vget_low_f32(b1))));
    acc[3] = vaddq_f64(acc[3], vmulq_f64(vcvt_high_f64_f32(a1), vcvt_high_f64_f32(b1)));
  }
  double l[8];
  for (int q = 0; q < 4; ++q) vst1q_f64(l + 2 * q, acc[q]);
  for (std::size_t t = 0; j < n; ++j, ++t) {
    l[t] += static_cast<double>(a[j]) * static_cast<double>(b[j]);
  }
  return ((l[0] + l[4]) + (l[1] + l[5])) + ((l[2] + l[6]) + (l[3] + l[7]));
}

double squared_distance(const float* a, const float* b, std::size_t n) noexcept {
  float64x2_t acc[4] = {vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0)};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const float32x4_t a0 = vld1q_f32(a + j);
    const float32x4_t a1 = vld1q_f32(a + j + 4);
    const float32x4_t b0 = vld1q_f32(b + j);
    const float32x4_t b1 = vld1q_f32(b + j + 4);
    const float64x2_t d0 = vsubq_f64(vcvt_f64_f32(vget_low_f32(a0)), vcvt_f64_f32(vget_low_f32(b0)));
    const float64x2_t d1 = vsubq_f64(vcvt_high_f64_f32(a0), vcvt_high_f64_f32(b0));
    const float64x2_t d2 = vsubq_f64(vcvt_f64_f32(vget_low_f32(a1)), vcvt_f64_f32(vget_low_f32(b1)));
    const float64x2_t d3 = vsubq_f64(vcvt_high_f64_f32(a1), vcvt_high_f64_f32(b1));
    acc[0] = vaddq_f64(acc[0], vmulq_f64(d0, d0));
    acc[1] = vaddq_f64(acc[1], vmulq_f64(d1, d1));
    acc[2] = vaddq_f64(acc[2], vmulq_f64(d2, d2));
    acc[3] = vaddq_f64(acc[3], vmulq_f64(d3, d3));
  }
  double l[8];
  for (int q = 0; q < 4; ++q) vst1q_f64(l + 2 * q, acc[q]);
  for (std::size_t t = 0; j < n; ++j, ++t) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    l[t] += diff * diff;
  }
  return ((l[0] + l[4]) + (l[1] + l[5])) + ((l[2] + l[6]) + (l[3] + l[7]));
}

}  // namespace lata::simd::neon

#endif
