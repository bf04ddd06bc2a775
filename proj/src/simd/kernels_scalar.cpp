#include "dyntok/simd/kernels.hpp"

namespace dyntok::simd {
namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float l2sq_scalar(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    const float d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void accumulate_scalar(float* dst, const float* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void scale_scalar(float* dst, float factor, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] *= factor;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{"scalar", dot_scalar, l2sq_scalar, accumulate_scalar, scale_scalar};
  return table;
}

}  // namespace dyntok::simd
