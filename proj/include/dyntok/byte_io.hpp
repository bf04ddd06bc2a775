#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "dyntok/error.hpp"

namespace dyntok::bytes {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return __builtin_bswap32(v);
  }
}

inline void put_u32(std::string& out, std::uint32_t v) {
  v = to_le(v);
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

// Sequential little-endian reader that reports the failing offset.
class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  void expect_magic(std::string_view magic) {
    if (remaining() < magic.size() || data_.substr(pos_, magic.size()) != magic) {
      throw format_error(pos_, "bad magic, expected '" + std::string(magic) + "'");
    }
    pos_ += magic.size();
  }

  std::uint32_t u32(std::string_view what) {
    if (remaining() < 4) throw format_error(pos_, "truncated while reading " + std::string(what));
    std::uint32_t v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return to_le(v);
  }

  float f32(std::string_view what) { return std::bit_cast<float>(u32(what)); }

  void require(std::size_t n, std::string_view what) {
    if (remaining() < n) throw format_error(pos_, "truncated " + std::string(what));
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace dyntok::bytes
