#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ftap::io {

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Strict parse: the whole (trimmed) field must be a finite decimal real.
std::optional<double> parse_double(std::string_view field);

// Splits one CSV record on commas. Quoting is not supported; none of the
// formats in this project need it.
std::vector<std::string> split_csv(std::string_view line);

std::string trim(std::string_view s);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view content);

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace ftap::io
