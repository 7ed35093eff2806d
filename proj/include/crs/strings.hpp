#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crs {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Strict numeric parsing; throws DataError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

/// Shortest round-trippable decimal representation.
std::string format_double(double v);
/// Fixed-precision formatting for report tables; "NA" for missing values.
std::string format_fixed(std::optional<double> v, int digits = 6);

}  // namespace crs
