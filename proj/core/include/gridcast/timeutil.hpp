#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace gridcast {

/// Calendar month. month is 1..12.
struct YearMonth {
  int year = 0;
  int month = 1;

  /// Months since year 0. Used for rolling-window arithmetic.
  int index() const { return year * 12 + (month - 1); }
  static YearMonth from_index(int idx);

  YearMonth next() const { return from_index(index() + 1); }
  YearMonth prev() const { return from_index(index() - 1); }

  /// Calendar quarter id (distinct integer per year-quarter).
  int quarter_id() const { return year * 4 + (month - 1) / 3; }

  auto operator<=>(const YearMonth&) const = default;

  std::string str() const; // "YYYY-MM"
  static YearMonth parse(const std::string& s);
};

/// Inclusive month range.
struct MonthRange {
  YearMonth first;
  YearMonth last;

  bool empty() const { return last.index() < first.index(); }
  int count() const { return empty() ? 0 : last.index() - first.index() + 1; }
  bool contains(YearMonth m) const {
    return m.index() >= first.index() && m.index() <= last.index();
  }
};

// Proleptic Gregorian civil-date conversions, days since 1970-01-01.
std::int64_t days_from_civil(int y, int m, int d);
void civil_from_days(std::int64_t z, int& y, int& m, int& d);
int days_in_month(YearMonth m);

/// Days since epoch of the first day of the month.
std::int64_t month_start_day(YearMonth m);
/// Minutes since epoch of the first instant of the month.
std::int64_t month_start_minutes(YearMonth m);

/// Parse "YYYY-MM-DD" into days since epoch. Throws ParseError.
std::int64_t parse_date(const std::string& s);
std::string format_date(std::int64_t days);

/// Parse an ISO-8601 UTC timestamp ("YYYY-MM-DDTHH:MM", optional ":SS" and
/// "Z" suffix, 'T' or ' ' separator) into minutes since epoch. Seconds are
/// truncated toward zero. Throws ParseError.
std::int64_t parse_timestamp_minutes(const std::string& s);
std::string format_timestamp_minutes(std::int64_t minutes); // "YYYY-MM-DDTHH:MMZ"

/// Month containing the given epoch-minute instant.
YearMonth month_of_minutes(std::int64_t minutes);
YearMonth month_of_day(std::int64_t days);

} // namespace gridcast
