#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace clayer {

/// Shortest decimal string that parses back to exactly `value`.
/// Negative zero is printed as "0".
std::string format_double(double value);

/// Strict decimal parse: the whole string must be a finite number.
std::optional<double> parse_double(std::string_view text);

}  // namespace clayer
