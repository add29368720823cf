#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace qualbn {

/// Shortest representation that parses back to the same double.
inline std::string format_shortest(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

inline std::string format_shortest(long double value) {
  char buf[96];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

/// printf("%.<precision>g") without locale dependence.
inline std::string format_general(double value, int precision = 9) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, precision);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

inline std::string format_fixed(double value, int decimals) {
  if (value == 0.0) value = 0.0;  // no "-0.0000"
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
  std::string text = ec == std::errc() ? std::string(buf, end) : std::string("nan");
  // A tiny negative rounds to "-0.0000"; drop the sign.
  if (text.front() == '-' && text.find_first_not_of("-0.") == std::string::npos) text.erase(0, 1);
  return text;
}

inline std::string format_signed_fixed(double value, int decimals) {
  std::string text = format_fixed(value, decimals);
  return text.front() == '-' ? text : "+" + text;
}

/// Whole-token parse of a finite double.
inline std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
    return std::nullopt;
  return value;
}

}  // namespace qualbn
