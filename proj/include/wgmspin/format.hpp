#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <string>

namespace wgmspin {

/// Shortest decimal text that reads back to the same double. Output is
/// locale-independent, so files written from identical inputs are identical.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace wgmspin
