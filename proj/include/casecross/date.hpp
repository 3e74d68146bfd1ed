#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "casecross/errors.hpp"

namespace casecross {

// Serial day count relative to 1970-01-01.
using DayNumber = std::int64_t;

namespace detail {

// Civil-calendar <-> serial-day conversions (proleptic Gregorian).
constexpr DayNumber days_from_civil(int y, int m, int d) noexcept {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return static_cast<DayNumber>(era) * 146097 + static_cast<int>(doe) - 719468;
}

struct CivilDate {
  int year;
  int month;  // 1..12
  int day;    // 1..31
};

constexpr CivilDate civil_from_days(DayNumber z) noexcept {
  z += 719468;
  const DayNumber era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

constexpr bool is_leap(int y) noexcept {
  return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0);
}

constexpr int days_in_month(int y, int m) noexcept {
  constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : lengths[m - 1];
}

}  // namespace detail

// Calendar date stored as a serial day number; value type, totally ordered.
class Date {
 public:
  Date() = default;

  Date(int year, int month, int day) {
    if (month < 1 || month > 12 || day < 1 || day > detail::days_in_month(year, month))
      throw data_error("invalid calendar date: " + std::to_string(year) + "-" +
                       std::to_string(month) + "-" + std::to_string(day));
    serial_ = detail::days_from_civil(year, month, day);
  }

  static Date from_serial(DayNumber n) {
    Date d;
    d.serial_ = n;
    return d;
  }

  DayNumber serial() const { return serial_; }
  int year() const { return detail::civil_from_days(serial_).year; }
  int month() const { return detail::civil_from_days(serial_).month; }
  int day() const { return detail::civil_from_days(serial_).day; }

  // 0 = Monday ... 6 = Sunday.
  int weekday() const {
    DayNumber z = serial_ + 3;  // 1970-01-01 was a Thursday
    return static_cast<int>(((z % 7) + 7) % 7);
  }

  Date plus_days(DayNumber n) const { return from_serial(serial_ + n); }

  std::string to_string() const {
    const auto c = detail::civil_from_days(serial_);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
  }

  friend bool operator==(Date a, Date b) { return a.serial_ == b.serial_; }
  friend auto operator<=>(Date a, Date b) { return a.serial_ <=> b.serial_; }

 private:
  DayNumber serial_ = 0;
};

// Strict YYYY-MM-DD parse.
inline Date parse_date(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw data_error("unparseable date (expected YYYY-MM-DD): '" + text + "'");
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (text[static_cast<size_t>(i)] < '0' || text[static_cast<size_t>(i)] > '9')
      throw data_error("unparseable date (expected YYYY-MM-DD): '" + text + "'");
  const int y = std::stoi(text.substr(0, 4));
  const int m = std::stoi(text.substr(5, 2));
  const int d = std::stoi(text.substr(8, 2));
  return Date(y, m, d);
}

}  // namespace casecross
