#include <doctest.h>

#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include "casecross/design.hpp"
#include "casecross/rng.hpp"
#include "casecross/simulate.hpp"

using namespace casecross;

namespace {

// Calendar brute force: scan every day of the hazard day's month.
std::vector<Date> referents_brute_force(Date hazard) {
  std::vector<Date> out;
  for (int day = 1; day <= 31; ++day) {
    if (day > detail::days_in_month(hazard.year(), hazard.month())) break;
    const Date d(hazard.year(), hazard.month(), day);
    if (d.weekday() == hazard.weekday() && !(d == hazard)) out.push_back(d);
  }
  return out;
}

EventList events_on(std::vector<Date> dates, int lag = 0) {
  EventList list;
  list.lag = lag;
  for (Date d : dates) list.events.push_back(Event{d, {}});
  return list;
}

}  // namespace

TEST_CASE("referent_days: the four June 2005 Wednesdays") {
  const std::vector<Date> expected{Date(2005, 6, 1), Date(2005, 6, 8), Date(2005, 6, 22),
                                   Date(2005, 6, 29)};
  CHECK(referent_days(Date(2005, 6, 15)) == expected);
}

TEST_CASE("referent_days: February 2001 always yields exactly 3 referents") {
  for (int day = 1; day <= 28; ++day)
    CHECK(referent_days(Date(2001, 2, day)).size() == 3);
}

TEST_CASE("referent_days matches brute force over random days") {
  Rng rng(99);
  const StudyCalendar cal(Date(2000, 4, 1), Date(2010, 3, 31));
  for (int t = 0; t < 300; ++t) {
    const int i = static_cast<int>(rng.uniform01() * cal.n_days());
    const Date hazard = cal.date_at(i);
    const auto got = referent_days(hazard);
    CHECK(got == referents_brute_force(hazard));
    CHECK((got.size() == 3 || got.size() == 4));
    for (Date r : got) {
      CHECK(r != hazard);
      CHECK(r.weekday() == hazard.weekday());
      CHECK(r.month() == hazard.month());
      CHECK(r.year() == hazard.year());
    }
  }
}

TEST_CASE("build_table: one event, lag 2") {
  const StudyCalendar cal(Date(2005, 1, 1), Date(2005, 12, 31));
  std::vector<double> vals(static_cast<size_t>(cal.n_days()));
  for (int i = 0; i < cal.n_days(); ++i) vals[static_cast<size_t>(i)] = 0.01 * i;
  const DailySeries s = DailySeries::from_values(cal, vals);
  const TrendDecomposition d = decompose(s);

  const auto table = build_table(events_on({Date(2005, 6, 17)}, 2), s, d);
  CHECK(table.n_strata == 1);
  CHECK(table.n_rows() == 5);  // hazard day 2005-06-15 + 4 referents
  int hazard_rows = 0;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (table.y[r] == 1.0) {
      ++hazard_rows;
      CHECK(table.date[r] == Date(2005, 6, 15));
    }
    const auto i = cal.day_index(table.date[r]);
    CHECK(table.exposure[r] == s.value(i));
  }
  CHECK(hazard_rows == 1);
}

TEST_CASE("build_table: missing hazard exposure drops the stratum") {
  const StudyCalendar cal(Date(2005, 1, 1), Date(2005, 12, 31));
  std::vector<double> vals(static_cast<size_t>(cal.n_days()), 1.0);
  for (int i = 0; i < cal.n_days(); ++i) vals[static_cast<size_t>(i)] += 0.37 * ((i * 7) % 13);
  vals[static_cast<size_t>(cal.day_index(Date(2005, 6, 15)))] =
      std::numeric_limits<double>::quiet_NaN();
  const DailySeries s = DailySeries::from_values(cal, vals);
  const TrendDecomposition d = decompose(s);

  const auto table = build_table(events_on({Date(2005, 6, 15), Date(2005, 7, 4)}), s, d);
  CHECK(table.n_strata == 1);
  CHECK(table.dropped_strata == 1);

  // the same missing day as a referent only shrinks its stratum
  const auto t2 = build_table(events_on({Date(2005, 6, 8)}), s, d);
  CHECK(t2.n_strata == 1);
  CHECK(t2.n_rows() == 4);  // one of the four referents is missing
  CHECK(t2.dropped_referent_rows == 1);
}

TEST_CASE("build_table errors: empty list and all strata dropped") {
  const StudyCalendar cal(Date(2005, 6, 1), Date(2005, 6, 30));
  std::vector<double> vals(static_cast<size_t>(cal.n_days()), 2.0);
  for (int i = 0; i < cal.n_days(); ++i) vals[static_cast<size_t>(i)] += (i % 5) * 0.21;
  const DailySeries s = DailySeries::from_values(cal, vals);
  const TrendDecomposition d = decompose(s);

  CHECK_THROWS_AS(build_table(events_on({}), s, d), data_error);
  // lag pushes every hazard day out of the study window
  CHECK_THROWS_AS(build_table(events_on({Date(2005, 6, 2)}, 4), s, d), data_error);
}

TEST_CASE("build_table: stratum purity and component consistency at scale") {
  const StudyCalendar cal(Date(2000, 4, 1), Date(2010, 3, 31));
  Rng rng(123);
  const DailySeries s = generate_synthetic_series(1.0, 0.5, 1.5, 0.4, cal, rng);
  const TrendDecomposition d = decompose(s);

  Rng draw(5150);
  std::vector<Date> dates;
  for (int i = 0; i < 5000; ++i)
    dates.push_back(cal.date_at(static_cast<int>(draw.uniform01() * cal.n_days())));
  const auto table = build_table(events_on(dates), s, d);

  CHECK(table.n_strata == 5000);
  std::vector<int> ones(5001, 0), zeros(5001, 0);
  std::set<std::pair<int, int>> stratum_keys;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const int sid = table.stratum[r];
    if (table.y[r] == 1.0)
      ++ones[static_cast<size_t>(sid)];
    else
      ++zeros[static_cast<size_t>(sid)];
    // all rows of a stratum share year, month and weekday
    stratum_keys.insert({sid, table.date[r].year() * 12 + table.date[r].month()});
    stratum_keys.insert({sid, -1 - table.date[r].weekday()});
    // exposure equals the sum of its components
    CHECK(std::abs(table.exposure[r] -
                   (table.yearly[r] + table.monthly[r] + table.weekly[r] + table.daily[r])) <
          1e-10);
  }
  for (int sid = 1; sid <= 5000; ++sid) {
    CHECK(ones[static_cast<size_t>(sid)] == 1);
    CHECK((zeros[static_cast<size_t>(sid)] == 3 || zeros[static_cast<size_t>(sid)] == 4));
  }
  CHECK(stratum_keys.size() == 2 * 5000);  // one month key and one weekday key per stratum

  // determinism: identical inputs give identical tables
  const auto again = build_table(events_on(dates), s, d);
  CHECK(again.n_rows() == table.n_rows());
  CHECK(again.date == table.date);
  CHECK(again.exposure == table.exposure);
  CHECK(again.y == table.y);
}

TEST_CASE("build_table carries covariates and drops rows missing them") {
  const StudyCalendar cal(Date(2005, 1, 1), Date(2005, 12, 31));
  std::vector<double> vals(static_cast<size_t>(cal.n_days()), 1.0);
  for (int i = 0; i < cal.n_days(); ++i) vals[static_cast<size_t>(i)] += (i % 11) * 0.05;
  const DailySeries s = DailySeries::from_values(cal, vals);
  const TrendDecomposition d = decompose(s);

  std::vector<double> temp(static_cast<size_t>(cal.n_days()), 15.0);
  temp[static_cast<size_t>(cal.day_index(Date(2005, 6, 8)))] =
      std::numeric_limits<double>::quiet_NaN();
  const DailySeries temperature = DailySeries::from_values(cal, temp);

  const auto table =
      build_table(events_on({Date(2005, 6, 15)}), s, d, {{"temperature", &temperature}});
  CHECK(table.n_rows() == 4);  // referent 2005-06-08 lost to the missing covariate
  CHECK(table.dropped_referent_rows == 1);
  CHECK(table.has_column("temperature"));
  for (double v : table.column("temperature")) CHECK(v == 15.0);
  CHECK_THROWS_AS(table.column("humidity"), data_error);
}

TEST_CASE("load_events keeps attributes") {
  std::istringstream in("date,sex,age_band\n2005-06-15,M,ge65\n2005-06-16,F,lt65\n");
  const EventList events = load_events(in, 2);
  CHECK(events.lag == 2);
  CHECK(events.events.size() == 2);
  CHECK(events.events[0].attribute("sex") == "M");
  CHECK(events.events[1].attribute("age_band") == "lt65");
  CHECK(events.events[1].attribute("absent") == "");
}
