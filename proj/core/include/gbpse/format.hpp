#pragma once

#include <string>

namespace gbpse {

/// Shortest round-trip decimal form of x; "nan", "inf", "-inf" for non-finite.
std::string format_number(double x);

}  // namespace gbpse
