#include "ghmm/format.hpp"

#include <charconv>
#include <ostream>

namespace ghmm {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

void write_number(std::ostream& os, double v) { os << format_number(v); }

}  // namespace ghmm
