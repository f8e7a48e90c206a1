#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Low-level text helpers shared by the line-oriented file formats.

namespace skeldiff::text {

/// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);

/// Strict decimal parse of the whole field; throws ParseError on garbage or
/// on a non-finite result.
double parse_finite_double(std::string_view field);

std::int64_t parse_int(std::string_view field);

std::vector<std::string_view> split(std::string_view line, char delimiter);

/// Strips one trailing '\r' and surrounding spaces/tabs are left untouched.
std::string_view chomp(std::string_view line);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace skeldiff::text
