#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace debate {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's raw bytes. Throws on I/O failure.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace debate
