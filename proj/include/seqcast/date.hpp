#ifndef SEQCAST_DATE_HPP
#define SEQCAST_DATE_HPP

#include <compare>
#include <cstdint>
#include <string>

namespace seqcast {

/// Proleptic Gregorian calendar date. Conversions use the standard
/// civil-from-days / days-from-civil algorithms, so arithmetic is exact
/// and locale-free.
struct Date {
    int year = 1970;
    unsigned month = 1; // 1..12
    unsigned day = 1;   // 1..31

    auto operator<=>(const Date&) const = default;

    /// Days since 1970-01-01 (may be negative).
    std::int64_t to_days() const;
    static Date from_days(std::int64_t days);

    Date next_day() const { return from_days(to_days() + 1); }

    bool valid() const;

    /// "YYYY-MM-DD".
    std::string iso() const;
};

enum class DateFormat {
    iso, // YYYY-MM-DD
    dmy, // D/M/YYYY
};

/// Parses a date in the given format; returns false on malformed input.
bool parse_date(const std::string& text, DateFormat format, Date& out);

/// Meteorological season index: Dec-Feb=0, Mar-May=1, Jun-Aug=2, Sep-Nov=3.
inline unsigned season_of(const Date& d) {
    return (d.month % 12) / 3;
}

} // namespace seqcast

#endif // SEQCAST_DATE_HPP
