#pragma once

// Small string and file helpers shared by the modules and the CLI.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tmf::text {

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::string replace_all(std::string s, std::string_view from, std::string_view to);
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Lower-cases and drops everything but letters and digits; used for
/// tolerant name matching.
std::string fold_name(std::string_view s);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view encoded);

std::string sha256_hex(std::string_view data);

/// Throws IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

} // namespace tmf::text
