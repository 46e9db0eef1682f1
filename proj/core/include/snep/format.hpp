#pragma once

#include <charconv>
#include <ostream>
#include <string>

namespace snep {

/// Shortest decimal that round-trips, independent of the global locale.
inline std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_number(std::ostream& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
}

}  // namespace snep
