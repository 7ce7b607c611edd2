#pragma once

#include <iosfwd>
#include <string>

namespace ghmm {

/// Shortest-independent CSV number: 17 significant digits, '.' decimal, no locale.
std::string format_number(double v);
void write_number(std::ostream& os, double v);

}  // namespace ghmm
