#ifndef TEMPANEL_FORMAT_HPP
#define TEMPANEL_FORMAT_HPP

#include <charconv>
#include <cstdio>
#include <string>

namespace tempanel {

/// Shortest representation that parses back to the same double.
inline std::string shortest(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

/// Six significant digits, scientific below the %g threshold ("8.10235e-05"
/// style). Table rendering format.
inline std::string fmt6(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/// Code-point count; our display labels only use single-width characters.
inline std::size_t utf8_len(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

}  // namespace tempanel

#endif
