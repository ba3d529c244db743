#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace mepo::data {

/// Calendar day. Parses and prints ISO-8601 YYYY-MM-DD.
class Date
{
public:
    Date() = default;
    explicit Date(std::chrono::sys_days d)
        : day_(d)
    {
    }

    static std::optional<Date> parse(std::string_view iso);
    std::string iso() const;

    /// 0 = Monday ... 6 = Sunday
    int weekday() const;

    Date plus(long days) const { return Date(day_ + std::chrono::days(days)); }
    long minus(const Date& other) const { return (day_ - other.day_).count(); }

    auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days day_{};
};

} // namespace mepo::data
