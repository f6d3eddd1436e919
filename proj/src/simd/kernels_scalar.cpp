#include "lata/simd.hpp"

namespace lata::simd::scalar {

namespace {

inline double fold(const double* l) noexcept {
  return ((l[0] + l[4]) + (l[1] + l[5])) + ((l[2] + l[6]) + (l[3] + l[7]));
}

}  // namespace

double dot(const float* a, const float* b, std::size_t n) noexcept {
  double lanes[8] = {};
  for (std::size_t j = 0; j < n; ++j) {
    lanes[j & 7] += static_cast<double>(a[j]) * static_cast<double>(b[j]);
  }
  return fold(lanes);
}

double squared_distance(const float* a, const float* b, std::size_t n) noexcept {
  double lanes[8] = {};
  for (std::size_t j = 0; j < n; ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    lanes[j & 7] += diff * diff;
  }
  return fold(lanes);
}

}  // namespace lata::simd::scalar
