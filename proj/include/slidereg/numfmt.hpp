#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <system_error>

#include "slidereg/errors.hpp"

namespace slidereg {

// Shortest decimal string that round-trips to the same double ("4.6", not
// "4.5999999999999996"). Used for PNM mpp comments and manifests.
inline std::string format_shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// 17 significant digits, the transform-file / metrics-CSV contract.
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline double parse_double(std::string_view s, const std::string& what) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(errc::format, "invalid number '" + std::string(s) + "' in " + what);
    return v;
}

inline long long parse_int(std::string_view s, const std::string& what) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(errc::format, "invalid integer '" + std::string(s) + "' in " + what);
    return v;
}

// Round half away from zero; the quantization rule used wherever intensities
// are snapped to 8 bits.
inline int round_half_away(double v) {
    return v >= 0.0 ? static_cast<int>(std::floor(v + 0.5)) : static_cast<int>(std::ceil(v - 0.5));
}

inline int clamp8(int v) { return v < 0 ? 0 : (v > 255 ? 255 : v); }

} // namespace slidereg
