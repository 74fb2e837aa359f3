#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace safecomp::text {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

// Comma-separated, full-precision rendering of a vector.
std::string join_doubles(std::span<const double> values, std::string_view sep = ",");

// Parses a finite double; nullopt on garbage, trailing characters or
// non-finite values.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace safecomp::text
