#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace dyadlss {

/// Shortest decimal that round-trips; "NA" for non-finite values.
inline std::string format_number(double v) {
    if (!std::isfinite(v)) return "NA";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_number(float v) {
    if (!std::isfinite(v)) return "NA";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace dyadlss
