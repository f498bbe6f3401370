#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ammfm {

/// Hex SHA-1 of raw bytes.
std::string sha1_hex(std::string_view bytes);

/// Git blob id: SHA-1 of "blob <size>\0" followed by the content.
std::string hash_blob(std::string_view content);
std::string hash_file(const std::filesystem::path& path);
/// Git tree id of a directory, with every file treated as mode 100644.
/// Empty directories hash like git's empty tree.
std::string hash_directory(const std::filesystem::path& path);
/// File or directory.
std::string hash_path(const std::filesystem::path& path);

}  // namespace ammfm
