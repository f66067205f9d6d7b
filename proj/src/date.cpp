#include "seqcast/date.hpp"

#include <cstdio>

namespace seqcast {

std::int64_t Date::to_days() const {
    // Howard Hinnant's days_from_civil.
    const int y = year - (month <= 2);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date Date::from_days(std::int64_t days) {
    // Howard Hinnant's civil_from_days.
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), m, d};
}

bool Date::valid() const {
    if (month < 1 || month > 12 || day < 1) return false;
    static const unsigned lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    unsigned max_day = lengths[month - 1];
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    if (month == 2 && leap) max_day = 29;
    return day <= max_day;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
    return buf;
}

bool parse_date(const std::string& text, DateFormat format, Date& out) {
    int y = 0;
    unsigned m = 0, d = 0;
    char trailing = 0;
    int matched = 0;
    if (format == DateFormat::iso) {
        matched = std::sscanf(text.c_str(), "%d-%u-%u%c", &y, &m, &d, &trailing);
    } else {
        matched = std::sscanf(text.c_str(), "%u/%u/%d%c", &d, &m, &y, &trailing);
    }
    if (matched != 3) return false;
    Date candidate{y, m, d};
    if (!candidate.valid()) return false;
    out = candidate;
    return true;
}

} // namespace seqcast
