#pragma once

#include <istream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "casecross/calendar.hpp"
#include "casecross/csv.hpp"
#include "casecross/date.hpp"
#include "casecross/errors.hpp"
#include "casecross/series.hpp"

namespace casecross {

struct Event {
  Date date;
  std::vector<std::pair<std::string, std::string>> attributes;

  std::string attribute(const std::string& name) const {
    for (const auto& [k, v] : attributes)
      if (k == name) return v;
    return {};
  }
};

// Case events plus the lag k: the hazard day of an event is event_date - k.
struct EventList {
  std::vector<Event> events;
  int lag = 0;
};

// Events CSV: a `date` column, every other column kept as a string attribute.
inline EventList load_events(std::istream& in, int lag = 0) {
  const CsvTable csv = read_csv(in);
  const int date_col = csv.require_column("date");
  EventList out;
  out.lag = lag;
  out.events.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    Event e;
    e.date = parse_date(row[static_cast<size_t>(date_col)]);
    for (std::size_t c = 0; c < csv.header.size(); ++c)
      if (static_cast<int>(c) != date_col) e.attributes.emplace_back(csv.header[c], row[c]);
    out.events.push_back(std::move(e));
  }
  return out;
}

inline EventList load_events_file(const std::string& path, int lag = 0) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open file: " + path);
  try {
    return load_events(in, lag);
  } catch (const data_error& e) {
    throw data_error(path + ": " + e.what());
  }
}

// Time-stratified referents: every day of the hazard day's calendar
// year-month sharing its weekday, the hazard day itself excluded, in
// ascending order. Always 3 or 4 days.
inline std::vector<Date> referent_days(Date hazard_day) {
  std::vector<Date> out;
  const int y = hazard_day.year();
  const int m = hazard_day.month();
  const int wd = hazard_day.weekday();
  for (int day = 1; day <= detail::days_in_month(y, m); ++day) {
    const Date d(y, m, day);
    if (d.weekday() == wd && d != hazard_day) out.push_back(d);
  }
  return out;
}

// Stacked analysis rows, one stratum per retained event. Column-oriented for
// cheap design-matrix assembly.
struct CaseCrossoverTable {
  std::vector<int> stratum;
  std::vector<Date> date;
  std::vector<double> y, exposure, yearly, monthly, weekly, daily;
  std::vector<std::pair<std::string, std::vector<double>>> covariates;

  int n_strata = 0;
  int dropped_referent_rows = 0;
  int dropped_strata = 0;
  int out_of_window_events = 0;

  std::size_t n_rows() const { return y.size(); }

  bool has_column(const std::string& name) const {
    if (name == "exposure" || name == "yearly" || name == "monthly" || name == "weekly" ||
        name == "daily")
      return true;
    for (const auto& [k, v] : covariates)
      if (k == name) return true;
    return false;
  }

  std::span<const double> column(const std::string& name) const {
    if (name == "exposure") return exposure;
    if (name == "yearly") return yearly;
    if (name == "monthly") return monthly;
    if (name == "weekly") return weekly;
    if (name == "daily") return daily;
    for (const auto& [k, v] : covariates)
      if (k == name) return v;
    throw data_error("unknown table column: '" + name + "'");
  }
};

// Builds case-crossover tables against one series/decomposition pair.
// Referent days are indexed once per calendar, so repeated builds (the
// simulation and calibration loops) skip the calendar scan. The referenced
// series, decomposition and covariates must outlive the builder.
class TableBuilder {
 public:
  TableBuilder(const DailySeries& series, const TrendDecomposition& decomp,
               std::vector<std::pair<std::string, const DailySeries*>> covariates = {})
      : series_(&series), decomp_(&decomp), covariates_(std::move(covariates)) {
    if (!(series.calendar() == decomp.calendar))
      throw data_error("series and decomposition use different study periods");
    for (const auto& [name, cov] : covariates_)
      if (!(cov->calendar() == series.calendar()))
        throw data_error("covariate series '" + name + "' uses a different study period");
    const StudyCalendar& cal = series.calendar();
    const int n = cal.n_days();
    referents_.resize(static_cast<size_t>(n));
    out_of_period_referents_.resize(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      for (const Date r : referent_days(cal.date_at(i))) {
        if (cal.contains(r))
          referents_[static_cast<size_t>(i)].push_back(cal.day_index(r));
        else
          ++out_of_period_referents_[static_cast<size_t>(i)];
      }
    }
  }

  const StudyCalendar& calendar() const { return series_->calendar(); }

  CaseCrossoverTable build(const EventList& events) const {
    if (events.events.empty()) throw data_error("cannot build table: empty event list");

    CaseCrossoverTable t;
    const std::size_t guess = events.events.size() * 5;
    for (auto* col : {&t.y, &t.exposure, &t.yearly, &t.monthly, &t.weekly, &t.daily})
      col->reserve(guess);
    t.stratum.reserve(guess);
    t.date.reserve(guess);
    t.covariates.reserve(covariates_.size());
    for (const auto& [name, cov] : covariates_) {
      t.covariates.emplace_back(name, std::vector<double>());
      t.covariates.back().second.reserve(guess);
    }

    const StudyCalendar& cal = series_->calendar();
    std::vector<int> kept_refs;
    for (const Event& e : events.events) {
      const Date hazard = e.date.plus_days(-events.lag);
      if (!cal.contains(hazard)) {
        ++t.out_of_window_events;
        continue;
      }
      const int hz = cal.day_index(hazard);
      if (!row_complete(hz)) {
        ++t.dropped_strata;
        continue;
      }
      kept_refs.clear();
      int dropped_here = out_of_period_referents_[static_cast<size_t>(hz)];
      for (int r : referents_[static_cast<size_t>(hz)]) {
        if (row_complete(r))
          kept_refs.push_back(r);
        else
          ++dropped_here;
      }
      if (kept_refs.empty()) {
        // no referent survives: the stratum dies, its hazard row with it
        ++t.dropped_strata;
        t.dropped_referent_rows += dropped_here;
        continue;
      }
      t.dropped_referent_rows += dropped_here;
      const int sid = ++t.n_strata;
      // kept_refs is ascending, so emitting the hazard row at its slot
      // keeps the stratum in date order
      std::size_t split = 0;
      while (split < kept_refs.size() && kept_refs[split] < hz) ++split;
      for (std::size_t i = 0; i < split; ++i) append_row(t, sid, kept_refs[i], 0.0);
      append_row(t, sid, hz, 1.0);
      for (std::size_t i = split; i < kept_refs.size(); ++i) append_row(t, sid, kept_refs[i], 0.0);
    }

    if (t.n_strata == 0)
      throw data_error(
          "all strata dropped: no event yields an in-window hazard day with complete data");
    return t;
  }

 private:
  bool row_complete(int day_idx) const {
    if (!series_->observed(day_idx)) return false;
    for (const auto& [name, cov] : covariates_)
      if (!cov->observed(day_idx)) return false;
    return true;
  }

  void append_row(CaseCrossoverTable& t, int sid, int day_idx, double y) const {
    const auto i = static_cast<size_t>(day_idx);
    t.stratum.push_back(sid);
    t.date.push_back(series_->calendar().date_at(day_idx));
    t.y.push_back(y);
    t.exposure.push_back(series_->value(day_idx));
    t.yearly.push_back(decomp_->yearly[i]);
    t.monthly.push_back(decomp_->monthly[i]);
    t.weekly.push_back(decomp_->weekly[i]);
    t.daily.push_back(decomp_->daily[i]);
    for (std::size_t c = 0; c < covariates_.size(); ++c)
      t.covariates[c].second.push_back(covariates_[c].second->value(day_idx));
  }

  const DailySeries* series_;
  const TrendDecomposition* decomp_;
  std::vector<std::pair<std::string, const DailySeries*>> covariates_;
  std::vector<std::vector<int>> referents_;
  std::vector<int> out_of_period_referents_;
};

inline CaseCrossoverTable build_table(
    const EventList& events, const DailySeries& series, const TrendDecomposition& decomp,
    std::vector<std::pair<std::string, const DailySeries*>> covariates = {}) {
  return TableBuilder(series, decomp, std::move(covariates)).build(events);
}

}  // namespace casecross
