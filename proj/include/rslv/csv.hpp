#pragma once

#include <cstdio>
#include <string>

namespace rslv {

/// Shortest round-trip-safe text for CSV payloads (17 significant digits).
inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace rslv
