#pragma once

#include <charconv>
#include <string>
#include <string_view>

namespace mepo {

/// Shortest round-trip decimal representation; stable across runs.
inline std::string fmt_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Fixed notation with the given number of decimals.
inline std::string fmt_fixed(double v, int decimals)
{
    char buf[128];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

} // namespace mepo
