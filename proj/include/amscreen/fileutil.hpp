#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace amscreen {

// Throws Error(io) when the file cannot be opened or read.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames over `path`, so readers never see
// a partial file. Throws Error(io) on failure and leaves `path` untouched.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// 64-bit FNV-1a; stable across platforms, used for derived ids.
std::uint64_t fnv1a64(std::string_view data);
std::string hex_id(std::string_view data);

}  // namespace amscreen
