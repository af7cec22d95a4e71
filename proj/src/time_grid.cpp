#include "dode/time_grid.hpp"

#include "dode/error.hpp"

#include <charconv>
#include <cstdio>

namespace dode {

Date parse_date(std::string_view text)
{
    auto fail = [&] { return ParseError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw fail();
    int y = 0;
    unsigned m = 0, d = 0;
    auto ok = [](std::string_view s, auto& out) {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc() && p == s.data() + s.size();
    };
    if (!ok(text.substr(0, 4), y) || !ok(text.substr(5, 2), m) || !ok(text.substr(8, 2), d))
        throw fail();
    Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok())
        throw fail();
    return date;
}

std::string format_date(const Date& date)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

Date add_days(const Date& date, int days)
{
    return Date{std::chrono::sys_days{date} + std::chrono::days{days}};
}

int days_between(const Date& a, const Date& b)
{
    return static_cast<int>((std::chrono::sys_days{b} - std::chrono::sys_days{a}).count());
}

TimeGrid::TimeGrid(int interval_minutes, std::vector<Date> days)
    : interval_minutes_(interval_minutes), days_(std::move(days))
{
    if (interval_minutes <= 0 || 1440 % interval_minutes != 0)
        throw InvalidArgument("interval length must divide 1440 minutes, got " + std::to_string(interval_minutes));
    intervals_per_day_ = static_cast<std::size_t>(1440 / interval_minutes);
    for (std::size_t i = 0; i < days_.size(); ++i) {
        if (!days_[i].ok())
            throw InvalidArgument("invalid day in grid");
        if (i > 0 && std::chrono::sys_days{days_[i]} <= std::chrono::sys_days{days_[i - 1]})
            throw InvalidArgument("grid days must be strictly increasing");
    }
}

std::vector<std::string> TimeGrid::day_labels() const
{
    std::vector<std::string> labels;
    labels.reserve(days_.size());
    for (const auto& d : days_)
        labels.push_back(format_date(d));
    return labels;
}

TimeGrid TimeGrid::coarsened(int factor) const
{
    if (factor < 1 || intervals_per_day_ % static_cast<std::size_t>(factor) != 0)
        throw InvalidArgument("rebin factor must divide the intervals per day");
    return TimeGrid(interval_minutes_ * factor, days_);
}

} // namespace dode
