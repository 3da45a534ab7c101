#include "clayer/numeric_format.hpp"

#include <charconv>
#include <cmath>

namespace clayer {

std::string format_double(double value) {
  if (value == 0.0) {
    return "0";
  }
  char buffer[64];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  // from_chars rejects a leading '+', which plain CSV writers sometimes emit.
  if (!text.empty() && text.front() == '+') {
    text.remove_prefix(1);
  }
  if (text.empty()) {
    return std::nullopt;
  }
  double value = 0.0;
  auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace clayer
