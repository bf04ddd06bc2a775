#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace dyntok::simd {

// Float vector primitives behind a runtime-selected table. The scalar table is
// the reference; wider variants must agree with it to rounding.
struct KernelTable {
  std::string_view name;
  float (*dot)(const float* a, const float* b, std::size_t n);
  float (*l2sq)(const float* a, const float* b, std::size_t n);
  // dst[i] += src[i]
  void (*accumulate)(float* dst, const float* src, std::size_t n);
  // dst[i] *= factor
  void (*scale)(float* dst, float factor, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;
// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

// Best available table. DYNTOK_SIMD=scalar in the environment forces the
// reference kernels.
const KernelTable& active() noexcept;

inline float dot(std::span<const float> a, std::span<const float> b) noexcept {
  return active().dot(a.data(), b.data(), a.size());
}

inline float l2sq(std::span<const float> a, std::span<const float> b) noexcept {
  return active().l2sq(a.data(), b.data(), a.size());
}

inline void accumulate(std::span<float> dst, std::span<const float> src) noexcept {
  active().accumulate(dst.data(), src.data(), dst.size());
}

inline void scale(std::span<float> dst, float factor) noexcept {
  active().scale(dst.data(), factor, dst.size());
}

}  // namespace dyntok::simd
