#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace finsleray {

// shortest decimal that round-trips to the same double; byte-stable goldens
inline std::string format_shortest(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// fixed 17 significant digits (tensor dumps)
inline std::string format_sig17(double v) {
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace finsleray
