#include <cstdlib>
#include <string_view>

#include "dyntok/simd/kernels.hpp"

namespace dyntok::simd {

#if defined(DYNTOK_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(DYNTOK_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif

const KernelTable* avx2_kernels() noexcept {
#if defined(DYNTOK_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() noexcept {
#if defined(DYNTOK_HAVE_NEON)
  return &neon_table();
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* forced = std::getenv("DYNTOK_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
    if (const auto* t = avx2_kernels()) return *t;
    if (const auto* t = neon_kernels()) return *t;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace dyntok::simd
