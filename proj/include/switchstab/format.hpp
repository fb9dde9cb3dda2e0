#pragma once

#include <cstdio>
#include <string>

namespace switchstab {

/// Decimal text with 17 significant digits: enough to round-trip any double
/// exactly, used for all CSV and console float output.
inline std::string to_string_17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace switchstab
