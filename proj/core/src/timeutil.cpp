#include "gridcast/timeutil.hpp"

#include <cstdio>

#include "gridcast/error.hpp"

namespace gridcast {

YearMonth YearMonth::from_index(int idx) {
  int y = idx / 12;
  int m = idx % 12;
  if (m < 0) {
    m += 12;
    y -= 1;
  }
  return YearMonth{y, m + 1};
}

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

YearMonth YearMonth::parse(const std::string& s) {
  int y = 0, m = 0;
  char extra = 0;
  if (std::sscanf(s.c_str(), "%d-%d%c", &y, &m, &extra) != 2 || m < 1 || m > 12) {
    throw ParseError("invalid month '" + s + "' (expected YYYY-MM)");
  }
  return YearMonth{y, m};
}

// Howard Hinnant's algorithms, days relative to 1970-01-01.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(yy + (m <= 2));
}

int days_in_month(YearMonth m) {
  const YearMonth n = m.next();
  return static_cast<int>(days_from_civil(n.year, n.month, 1) -
                          days_from_civil(m.year, m.month, 1));
}

std::int64_t month_start_day(YearMonth m) { return days_from_civil(m.year, m.month, 1); }

std::int64_t month_start_minutes(YearMonth m) { return month_start_day(m) * 1440; }

std::int64_t parse_date(const std::string& s) {
  int y = 0, mo = 0, d = 0;
  char extra = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d%c", &y, &mo, &d, &extra) != 3 || mo < 1 ||
      mo > 12 || d < 1 || d > days_in_month(YearMonth{y, mo})) {
    throw ParseError("invalid date '" + s + "' (expected YYYY-MM-DD)");
  }
  return days_from_civil(y, mo, d);
}

std::string format_date(std::int64_t days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

std::int64_t parse_timestamp_minutes(const std::string& s) {
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  char sep = 0;
  int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &hh, &mm, &ss);
  if (n < 6 || (sep != 'T' && sep != ' ')) {
    throw ParseError("invalid timestamp '" + s + "' (expected YYYY-MM-DDTHH:MM[:SS][Z])");
  }
  // Anything after the parsed fields must be a bare "Z" (or nothing).
  const char* rest = s.c_str();
  int consumed = 0;
  if (n == 7) {
    std::sscanf(rest, "%d-%d-%d%c%d:%d:%d%n", &y, &mo, &d, &sep, &hh, &mm, &ss, &consumed);
  } else {
    std::sscanf(rest, "%d-%d-%d%c%d:%d%n", &y, &mo, &d, &sep, &hh, &mm, &consumed);
  }
  std::string tail = s.substr(consumed);
  if (!tail.empty() && tail != "Z") {
    throw ParseError("invalid timestamp suffix '" + tail + "' in '" + s + "'");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(YearMonth{y, mo}) || hh < 0 ||
      hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 60) {
    throw ParseError("timestamp field out of range in '" + s + "'");
  }
  // Seconds truncated: minute resolution is the unit of the event log.
  return (days_from_civil(y, mo, d) * 24 + hh) * 60 + mm;
}

std::string format_timestamp_minutes(std::int64_t minutes) {
  std::int64_t days = minutes / 1440;
  std::int64_t rem = minutes % 1440;
  if (rem < 0) {
    rem += 1440;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return buf;
}

YearMonth month_of_minutes(std::int64_t minutes) {
  std::int64_t days = minutes / 1440;
  if (minutes % 1440 < 0) days -= 1;
  return month_of_day(days);
}

YearMonth month_of_day(std::int64_t days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  return YearMonth{y, m};
}

} // namespace gridcast
