#include "core/date.hpp"

#include <charconv>
#include <chrono>

#include "core/error.hpp"

namespace tse {

namespace {

namespace chr = std::chrono;

chr::year_month_day to_ymd(int64_t days) {
    return chr::year_month_day{chr::sys_days{chr::days{days}}};
}

} // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
    if (!ymd.ok())
        throw TseError(ErrorCode::parse, "invalid calendar date: " + std::to_string(year) + "-" +
                                             std::to_string(month) + "-" + std::to_string(day));
    return from_day_number(chr::sys_days{ymd}.time_since_epoch().count());
}

std::optional<Date> Date::parse(std::string_view text) {
    // YYYY-MM-DD, all digits, fixed layout
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        return std::nullopt;
    auto digits = [&](size_t pos, size_t len, int& out) {
        auto* first = text.data() + pos;
        auto [p, ec] = std::from_chars(first, first + len, out);
        return ec == std::errc{} && p == first + len;
    };
    int y = 0, m = 0, d = 0;
    if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d))
        return std::nullopt;
    chr::year_month_day ymd{chr::year{y}, chr::month{unsigned(m)}, chr::day{unsigned(d)}};
    if (!ymd.ok())
        return std::nullopt;
    return from_day_number(chr::sys_days{ymd}.time_since_epoch().count());
}

Date Date::parse_or_throw(std::string_view text, const std::string& context) {
    auto d = parse(text);
    if (!d) {
        std::string msg = "unparseable date '" + std::string(text) + "'";
        if (!context.empty())
            msg += " (" + context + ")";
        throw TseError(ErrorCode::parse, msg);
    }
    return *d;
}

std::string Date::to_string() const {
    auto ymd = to_ymd(days_);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

int Date::year() const { return int(to_ymd(days_).year()); }

} // namespace tse
