#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace volnet {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and renames, so readers never observe a
/// partially written file.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace volnet
