#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dode {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; throws ParseError.
Date parse_date(std::string_view text);
std::string format_date(const Date& date);
Date add_days(const Date& date, int days);
/// b - a in days.
int days_between(const Date& a, const Date& b);

/// Uniform intervals over a list of calendar days. Global interval t lives on day t / intervals_per_day.
class TimeGrid {
public:
    TimeGrid() = default;
    /// Throws InvalidArgument unless interval_minutes divides 1440 and days are strictly increasing.
    TimeGrid(int interval_minutes, std::vector<Date> days);

    int interval_minutes() const noexcept { return interval_minutes_; }
    std::size_t intervals_per_day() const noexcept { return intervals_per_day_; }
    std::size_t day_count() const noexcept { return days_.size(); }
    std::size_t interval_count() const noexcept { return intervals_per_day_ * days_.size(); }
    const std::vector<Date>& days() const noexcept { return days_; }
    std::vector<std::string> day_labels() const;

    std::size_t day_of(std::size_t interval) const { return interval / intervals_per_day_; }
    std::size_t first_interval_of_day(std::size_t day) const { return day * intervals_per_day_; }
    /// Minutes since the start of the grid (the grid is treated as one continuous horizon).
    double start_minutes(std::size_t interval) const { return static_cast<double>(interval) * interval_minutes_; }
    double horizon_minutes() const { return static_cast<double>(interval_count()) * interval_minutes_; }

    /// Grid with `factor` original intervals merged into one.
    TimeGrid coarsened(int factor) const;

    bool operator==(const TimeGrid&) const = default;

private:
    int interval_minutes_ = 5;
    std::size_t intervals_per_day_ = 288;
    std::vector<Date> days_;
};

} // namespace dode
