#pragma once
// Data-parallel inner kernels over f32 inputs with f64 accumulation.
//
// Every variant reduces in the same order: eight interleaved f64 lanes
// (element j goes to lane j % 8), tail elements continue the lane pattern,
// and the lanes are folded as ((l0+l4)+(l1+l5)) + ((l2+l6)+(l3+l7)).
// Because an f32*f32 product is exact in f64 and no variant fuses
// multiply-add, all variants return bit-identical results.

#include <cstddef>
#include <string_view>

namespace lata::simd {

using DotFn = double (*)(const float* a, const float* b, std::size_t n) noexcept;
using SqDistFn = double (*)(const float* a, const float* b, std::size_t n) noexcept;

struct KernelTable {
  std::string_view name;
  DotFn dot;
  SqDistFn squared_distance;
};

namespace scalar {
double dot(const float* a, const float* b, std::size_t n) noexcept;
double squared_distance(const float* a, const float* b, std::size_t n) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const float* a, const float* b, std::size_t n) noexcept;
double squared_distance(const float* a, const float* b, std::size_t n) noexcept;
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const float* a, const float* b, std::size_t n) noexcept;
double squared_distance(const float* a, const float* b, std::size_t n) noexcept;
}  // namespace neon
#endif

/// Reference table, always available.
const KernelTable& scalar_kernels() noexcept;

/// Best table for this CPU. LATA_SIMD=scalar forces the reference path.
const KernelTable& active_kernels() noexcept;

/// All tables usable on this CPU (scalar first); for equivalence tests.
std::size_t available_kernels(const KernelTable** out, std::size_t capacity) noexcept;

inline double dot(const float* a, const float* b, std::size_t n) noexcept {
  return active_kernels().dot(a, b, n);
}

inline double squared_distance(const float* a, const float* b, std::size_t n) noexcept {
  return active_kernels().squared_distance(a, b, n);
}

}  // namespace lata::simd
