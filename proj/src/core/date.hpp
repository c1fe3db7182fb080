#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tse {

/// Calendar date at day precision (proleptic Gregorian), stored as a day
/// count so that day arithmetic and differences are trivial. All windows in
/// this project are inclusive on both ends.
class Date {
public:
    Date() = default; // epoch (1970-01-01); prefer the named constructors

    static Date from_ymd(int year, unsigned month, unsigned day);

    /// Strict ISO 8601 calendar date, "YYYY-MM-DD".
    static std::optional<Date> parse(std::string_view text);

    /// Like parse() but throws TseError(parse) with `context` in the message.
    static Date parse_or_throw(std::string_view text, const std::string& context = "");

    static Date from_day_number(int64_t days_since_epoch) {
        Date d;
        d.days_ = days_since_epoch;
        return d;
    }

    std::string to_string() const;

    int year() const;

    Date plus_days(int64_t n) const { return from_day_number(days_ + n); }

    /// Day count since 1970-01-01; negative before the epoch.
    int64_t day_number() const { return days_; }

    friend int64_t operator-(Date a, Date b) { return a.days_ - b.days_; }
    auto operator<=>(const Date&) const = default;

private:
    int64_t days_ = 0;
};

inline Date max(Date a, Date b) { return a < b ? b : a; }
inline Date min(Date a, Date b) { return a < b ? a : b; }

} // namespace tse
