#include "data/date.hpp"

#include <charconv>
#include <cstdio>

namespace mepo::data {

std::optional<Date> Date::parse(std::string_view s)
{
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        return std::nullopt;
    }
    int y = 0;
    unsigned m = 0, d = 0;
    auto ok = [](std::from_chars_result r, const char* end) { return r.ec == std::errc{} && r.ptr == end; };
    if (!ok(std::from_chars(s.data(), s.data() + 4, y), s.data() + 4) ||
        !ok(std::from_chars(s.data() + 5, s.data() + 7, m), s.data() + 7) ||
        !ok(std::from_chars(s.data() + 8, s.data() + 10, d), s.data() + 10)) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date(std::chrono::sys_days{ymd});
}

std::string Date::iso() const
{
    std::chrono::year_month_day ymd{day_};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int Date::weekday() const
{
    return static_cast<int>(std::chrono::weekday{day_}.iso_encoding()) - 1;
}

} // namespace mepo::data
