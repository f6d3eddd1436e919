#include <cstdlib>
#include <cstring>

#include "lata/simd.hpp"

namespace lata::simd {

namespace {

constexpr KernelTable kScalar{"scalar", &scalar::dot, &scalar::squared_distance};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2{"avx2", &avx2::dot, &avx2::squared_distance};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeon{"neon", &neon::dot, &neon::squared_distance};
#endif

bool forced_scalar() noexcept {
  const char* env = std::getenv("LATA_SIMD");
  return env != nullptr && std::strcmp(env, "scalar") == 0;
}

const KernelTable& select() noexcept {
  if (forced_scalar()) return kScalar;
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return kAvx2;
#endif
#if defined(__aarch64__)
  return kNeon;
#endif
  return kScalar;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

const KernelTable& active_kernels() noexcept {
  static const KernelTable& table = select();
  return table;
}

std::size_t available_kernels(const KernelTable** out, std::size_t capacity) noexcept {
  std::size_t count = 0;
  auto push = [&](const KernelTable& t) {
    if (count < capacity) out[count] = &t;
    ++count;
  };
  push(kScalar);
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) push(kAvx2);
#endif
#if defined(__aarch64__)
  push(kNeon);
#endif
  return count;
}

}  // namespace lata::simd
