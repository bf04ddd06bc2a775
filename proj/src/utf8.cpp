#include "dyntok/utf8.hpp"

#include "dyntok/error.hpp"

namespace dyntok::utf8 {

std::size_t char_length(std::string_view text) noexcept {
  if (text.empty()) return 0;
  const auto lead = static_cast<unsigned char>(text[0]);
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 0;
}

char32_t decode(std::string_view text, std::size_t& pos) {
  const std::size_t len = char_length(text.substr(pos));
  if (len == 0 || pos + len > text.size()) {
    throw format_error(pos, "invalid UTF-8 sequence");
  }
  const auto lead = static_cast<unsigned char>(text[pos]);
  char32_t cp = len == 1 ? lead : len == 2 ? (lead & 0x1F) : len == 3 ? (lead & 0x0F) : (lead & 0x07);
  for (std::size_t i = 1; i < len; ++i) {
    const auto cont = static_cast<unsigned char>(text[pos + i]);
    if ((cont & 0xC0) != 0x80) throw format_error(pos + i, "invalid UTF-8 continuation byte");
    cp = (cp << 6) | (cont & 0x3F);
  }
  // overlong forms and surrogates
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    throw format_error(pos, "invalid UTF-8 scalar value");
  }
  pos += len;
  return cp;
}

std::vector<std::string> split_chars(std::string_view text) {
  std::vector<std::string> out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    decode(text, pos);
    out.emplace_back(text.substr(start, pos - start));
  }
  return out;
}

std::size_t count_chars(std::string_view text) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    decode(text, pos);
    ++n;
  }
  return n;
}

bool is_space(char32_t cp) noexcept {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

}  // namespace dyntok::utf8
