#pragma once

#include <string>
#include <string_view>

namespace dyntok {

std::string read_file(const std::string& path);

// Writes to a sibling temporary file and renames it into place, so readers
// never observe a partial file.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace dyntok
