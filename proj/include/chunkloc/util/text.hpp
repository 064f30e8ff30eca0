#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chunkloc::text {

std::vector<std::string_view> split(std::string_view line, char sep);
std::vector<std::string_view> split_whitespace(std::string_view line);
std::string_view trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Strict integer / real parsing; throws FormatError with the given line.
unsigned long long parse_u64(std::string_view s, std::uint64_t line);
double parse_double(std::string_view s, std::uint64_t line);

// Shortest text form that parses back to the same double.
std::string format_double(double v);

}  // namespace chunkloc::text
