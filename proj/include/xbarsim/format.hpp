#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace xbarsim {

/// Shortest representation that round-trips to the same double.
inline std::string format_double(double value) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        return "nan";
    }
    return {buf, end};
}

/// Fixed-point with `digits` decimals.
inline std::string format_fixed(double value, int digits) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, digits);
    if (ec != std::errc{}) {
        return "nan";
    }
    return {buf, end};
}

}  // namespace xbarsim
