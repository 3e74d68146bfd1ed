#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "casecross/calendar.hpp"
#include "casecross/csv.hpp"
#include "casecross/date.hpp"
#include "casecross/errors.hpp"
#include "casecross/math.hpp"

namespace casecross {

// Daily exposure measurements over a study period, one slot per day,
// NaN-backed missing values. Immutable after construction.
class DailySeries {
 public:
  static DailySeries from_values(StudyCalendar calendar, std::vector<double> values) {
    if (static_cast<int>(values.size()) != calendar.n_days())
      throw data_error("series has " + std::to_string(values.size()) + " slots, expected " +
                       std::to_string(calendar.n_days()));
    return DailySeries(std::move(calendar), std::move(values));
  }

  const StudyCalendar& calendar() const { return calendar_; }
  int n_days() const { return calendar_.n_days(); }
  bool observed(int day_idx) const { return !std::isnan(values_[static_cast<size_t>(day_idx)]); }
  double value(int day_idx) const { return values_[static_cast<size_t>(day_idx)]; }
  const std::vector<double>& values() const { return values_; }

  int n_observed() const {
    int n = 0;
    for (double v : values_) n += !std::isnan(v);
    return n;
  }

  std::vector<double> observed_values() const {
    std::vector<double> out;
    out.reserve(values_.size());
    for (double v : values_)
      if (!std::isnan(v)) out.push_back(v);
    return out;
  }

 private:
  DailySeries(StudyCalendar calendar, std::vector<double> values)
      : calendar_(std::move(calendar)), values_(std::move(values)) {}

  StudyCalendar calendar_;
  std::vector<double> values_;
};

// Reads a daily series from CSV: a `date` column plus one value column.
// Empty cells and absent dates become missing; duplicate or out-of-period
// dates and unparseable values are rejected. An empty `value_column` picks
// the single non-date column.
inline DailySeries load_series(std::istream& in, const std::string& value_column,
                               const StudyCalendar& calendar) {
  const CsvTable csv = read_csv(in);
  const int date_col = csv.require_column("date");
  int value_col;
  if (value_column.empty()) {
    if (csv.header.size() != 2)
      throw data_error("value column not named and file has " +
                       std::to_string(csv.header.size()) + " columns; use an explicit column");
    value_col = date_col == 0 ? 1 : 0;
  } else {
    value_col = csv.require_column(value_column);
  }

  std::vector<double> values(static_cast<size_t>(calendar.n_days()),
                             std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(static_cast<size_t>(calendar.n_days()), false);
  for (const auto& row : csv.rows) {
    const Date date = parse_date(row[static_cast<size_t>(date_col)]);
    if (!calendar.contains(date))
      throw data_error("date " + date.to_string() + " outside study period " +
                       calendar.start().to_string() + ".." + calendar.end().to_string());
    const auto idx = static_cast<size_t>(calendar.day_index(date));
    if (seen[idx]) throw data_error("duplicate date: " + date.to_string());
    seen[idx] = true;
    const std::string& cell = row[static_cast<size_t>(value_col)];
    if (cell.empty()) continue;  // missing
    try {
      std::size_t pos = 0;
      values[idx] = std::stod(cell, &pos);
      if (pos != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw data_error("unparseable value '" + cell + "' for date " + date.to_string());
    }
  }
  return DailySeries::from_values(calendar, std::move(values));
}

inline DailySeries load_series_file(const std::string& path, const std::string& value_column,
                                    const StudyCalendar& calendar) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open file: " + path);
  try {
    return load_series(in, value_column, calendar);
  } catch (const data_error& e) {
    throw data_error(path + ": " + e.what());
  }
}

// Infers the tightest study period covering a series file's dates.
inline StudyCalendar infer_calendar(const std::string& path) {
  const CsvTable csv = read_csv_file(path);
  const int date_col = csv.require_column("date");
  if (csv.rows.empty()) throw data_error(path + ": no data rows");
  Date lo = parse_date(csv.rows.front()[static_cast<size_t>(date_col)]);
  Date hi = lo;
  for (const auto& row : csv.rows) {
    const Date d = parse_date(row[static_cast<size_t>(date_col)]);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return StudyCalendar(lo, hi);
}

// Divides every observed value by the interquartile range of the observed
// values; the returned series has IQR exactly 1.
inline std::pair<DailySeries, double> iqr_standardize(const DailySeries& series) {
  std::vector<double> obs = series.observed_values();
  if (obs.size() < 2)
    throw numeric_error("degenerate scale: need at least 2 observed values, have " +
                        std::to_string(obs.size()));
  std::sort(obs.begin(), obs.end());
  const double iqr = quantile_sorted(obs, 0.75) - quantile_sorted(obs, 0.25);
  if (!(iqr > 0.0))
    throw numeric_error("degenerate scale: interquartile range of observed values is zero");
  std::vector<double> scaled = series.values();
  for (double& v : scaled) v /= iqr;  // NaN stays NaN
  return {DailySeries::from_values(series.calendar(), std::move(scaled)), iqr};
}

// The four additive components of a daily series: block means over fiscal
// years, year-months and ISO weeks, plus the per-day remainder. Components
// are defined for every day of the period; the daily residual exists only
// where the input is observed.
struct TrendDecomposition {
  StudyCalendar calendar;
  std::vector<double> yearly, monthly, weekly, daily;

  int n_days() const { return calendar.n_days(); }
  bool has_daily(int day_idx) const { return !std::isnan(daily[static_cast<size_t>(day_idx)]); }
};

// Sequential block-mean extraction: yearly means first, then monthly means
// of what remains, then weekly means of what remains; block means use
// observed days only and compensated accumulation.
inline TrendDecomposition decompose(const DailySeries& series) {
  const StudyCalendar& cal = series.calendar();
  const int n = cal.n_days();
  const auto nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<int> yb(static_cast<size_t>(n)), mb(static_cast<size_t>(n)),
      wb(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Date d = cal.date_at(i);
    yb[static_cast<size_t>(i)] = cal.year_block(d);
    mb[static_cast<size_t>(i)] = cal.month_block(d);
    wb[static_cast<size_t>(i)] = cal.week_block(d);
  }

  struct BlockMeans {
    std::vector<CompensatedSum> sums;
    std::vector<int> counts;
    explicit BlockMeans(int n_blocks)
        : sums(static_cast<size_t>(n_blocks)), counts(static_cast<size_t>(n_blocks), 0) {}
    void add(int block, double v) {
      sums[static_cast<size_t>(block)].add(v);
      ++counts[static_cast<size_t>(block)];
    }
    double mean(int block) const {
      return sums[static_cast<size_t>(block)].value() /
             static_cast<double>(counts[static_cast<size_t>(block)]);
    }
  };

  auto check_coverage = [&](const BlockMeans& bm, const char* kind, auto label) {
    for (std::size_t b = 0; b < bm.counts.size(); ++b)
      if (bm.counts[b] == 0)
        throw data_error(std::string("decomposition undefined: ") + kind + " block " +
                         label(static_cast<int>(b)) + " has no observed days");
  };

  TrendDecomposition out{cal,
                         std::vector<double>(static_cast<size_t>(n)),
                         std::vector<double>(static_cast<size_t>(n)),
                         std::vector<double>(static_cast<size_t>(n)),
                         std::vector<double>(static_cast<size_t>(n), nan)};

  BlockMeans year_means(cal.n_year_blocks());
  for (int i = 0; i < n; ++i)
    if (series.observed(i)) year_means.add(yb[static_cast<size_t>(i)], series.value(i));
  check_coverage(year_means, "year", [&](int b) { return cal.year_block_label(b); });
  for (int i = 0; i < n; ++i)
    out.yearly[static_cast<size_t>(i)] = year_means.mean(yb[static_cast<size_t>(i)]);

  BlockMeans month_means(cal.n_month_blocks());
  for (int i = 0; i < n; ++i)
    if (series.observed(i))
      month_means.add(mb[static_cast<size_t>(i)],
                      series.value(i) - out.yearly[static_cast<size_t>(i)]);
  check_coverage(month_means, "month", [&](int b) { return cal.month_block_label(b); });
  for (int i = 0; i < n; ++i)
    out.monthly[static_cast<size_t>(i)] = month_means.mean(mb[static_cast<size_t>(i)]);

  BlockMeans week_means(cal.n_week_blocks());
  for (int i = 0; i < n; ++i)
    if (series.observed(i))
      week_means.add(wb[static_cast<size_t>(i)], series.value(i) -
                                                     out.yearly[static_cast<size_t>(i)] -
                                                     out.monthly[static_cast<size_t>(i)]);
  check_coverage(week_means, "week", [&](int b) { return cal.week_block_label(b); });
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<size_t>(i);
    out.weekly[idx] = week_means.mean(wb[idx]);
    if (series.observed(i))
      out.daily[idx] = series.value(i) - out.yearly[idx] - out.monthly[idx] - out.weekly[idx];
  }
  return out;
}

}  // namespace casecross
