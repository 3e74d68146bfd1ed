#pragma once

#include <array>
#include <string>

#include "casecross/date.hpp"
#include "casecross/errors.hpp"

namespace casecross {

// Study period with its three nested-ish block systems:
//   year blocks  = fiscal years (Apr 1 - Mar 31),
//   month blocks = calendar year-months,
//   week blocks  = ISO weeks (Mon-Sun), truncated at the study boundaries.
// Every day of the period belongs to exactly one block of each kind; week
// blocks may straddle month (and fiscal-year) boundaries.
class StudyCalendar {
 public:
  StudyCalendar(Date start, Date end) : start_(start), end_(end) {
    if (start > end)
      throw data_error("study period start " + start.to_string() + " is after end " +
                       end.to_string());
    fy_first_ = fiscal_year(start);
    ym_first_ = year_month(start);
    monday_first_ = monday_of(start.serial());
    n_year_blocks_ = fiscal_year(end) - fy_first_ + 1;
    n_month_blocks_ = year_month(end) - ym_first_ + 1;
    n_week_blocks_ = static_cast<int>((monday_of(end.serial()) - monday_first_) / 7) + 1;
  }

  Date start() const { return start_; }
  Date end() const { return end_; }
  int n_days() const { return static_cast<int>(end_.serial() - start_.serial() + 1); }

  bool contains(Date d) const { return d >= start_ && d <= end_; }

  int day_index(Date d) const {
    if (!contains(d))
      throw data_error("date " + d.to_string() + " outside study period " +
                       start_.to_string() + ".." + end_.to_string());
    return static_cast<int>(d.serial() - start_.serial());
  }

  Date date_at(int day_idx) const { return start_.plus_days(day_idx); }

  int n_year_blocks() const { return n_year_blocks_; }
  int n_month_blocks() const { return n_month_blocks_; }
  int n_week_blocks() const { return n_week_blocks_; }

  int year_block(Date d) const { return fiscal_year(d) - fy_first_; }
  int month_block(Date d) const { return year_month(d) - ym_first_; }
  int week_block(Date d) const {
    return static_cast<int>((monday_of(d.serial()) - monday_first_) / 7);
  }

  int year_block_at(int day_idx) const { return year_block(date_at(day_idx)); }
  int month_block_at(int day_idx) const { return month_block(date_at(day_idx)); }
  int week_block_at(int day_idx) const { return week_block(date_at(day_idx)); }

  std::string year_block_label(int block) const {
    return "FY" + std::to_string(fy_first_ + block);
  }
  std::string month_block_label(int block) const {
    const int ym = ym_first_ + block;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", ym / 12, ym % 12 + 1);
    return buf;
  }
  std::string week_block_label(int block) const {
    return "week of " + Date::from_serial(monday_first_ + 7 * block).to_string();
  }

  friend bool operator==(const StudyCalendar& a, const StudyCalendar& b) {
    return a.start_ == b.start_ && a.end_ == b.end_;
  }

 private:
  static int fiscal_year(Date d) { return d.month() >= 4 ? d.year() : d.year() - 1; }
  static int year_month(Date d) { return d.year() * 12 + d.month() - 1; }
  static DayNumber monday_of(DayNumber serial) {
    return serial - Date::from_serial(serial).weekday();
  }

  Date start_, end_;
  int fy_first_ = 0;
  int ym_first_ = 0;
  DayNumber monday_first_ = 0;
  int n_year_blocks_ = 0, n_month_blocks_ = 0, n_week_blocks_ = 0;
};

enum class Season { All, Spring, Summer, Autumn, Winter };

inline const char* season_label(Season s) {
  switch (s) {
    case Season::All: return "All";
    case Season::Spring: return "Spring";
    case Season::Summer: return "Summer";
    case Season::Autumn: return "Autumn";
    case Season::Winter: return "Winter";
  }
  return "?";
}

inline Season parse_season(const std::string& text) {
  for (Season s : {Season::All, Season::Spring, Season::Summer, Season::Autumn, Season::Winter})
    if (text == season_label(s)) return s;
  throw data_error("unknown season: '" + text + "'");
}

// Month -> season assignment, meteorological by default
// (Mar-May Spring, Jun-Aug Summer, Sep-Nov Autumn, Dec-Feb Winter).
struct SeasonRule {
  std::array<Season, 12> by_month{
      Season::Winter, Season::Winter, Season::Spring, Season::Spring,
      Season::Spring, Season::Summer, Season::Summer, Season::Summer,
      Season::Autumn, Season::Autumn, Season::Autumn, Season::Winter};

  Season of(Date d) const { return by_month[static_cast<size_t>(d.month() - 1)]; }
};

inline Season season_of(Date d) { return SeasonRule{}.of(d); }

}  // namespace casecross
