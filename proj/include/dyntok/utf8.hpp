#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dyntok::utf8 {

// Splits a UTF-8 string into its Unicode scalar values, each returned as the
// encoded byte string. Throws Error(FormatError) on invalid encoding.
std::vector<std::string> split_chars(std::string_view text);

// Byte length of the scalar starting at text[0]; 0 if the lead byte is invalid.
std::size_t char_length(std::string_view text) noexcept;

std::size_t count_chars(std::string_view text);

bool is_space(char32_t cp) noexcept;

// Decodes one scalar; returns the code point and advances `pos`.
char32_t decode(std::string_view text, std::size_t& pos);

}  // namespace dyntok::utf8
