#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tzsl {

// Shortest decimal that parses back to the same double.
std::string format_real(double x);

// Strict parse of a full token; throws FormatError mentioning `context`.
double parse_real(std::string_view token, const std::string& context);
std::size_t parse_count(std::string_view token, const std::string& context);

std::vector<std::string_view> split(std::string_view text, char sep);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

// Derives an independent stream seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary and renames it into place, so a failed write
// never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace tzsl
