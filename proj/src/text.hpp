#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace packsim {

// Shortest round-trip decimal form of a double ("0.1", "1e-13", "250").
// Used for CSV cells and diagnostics so output is byte-stable and parses
// back to the identical value.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace packsim
