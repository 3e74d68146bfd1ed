#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "casecross/rng.hpp"
#include "casecross/series.hpp"
#include "casecross/simulate.hpp"

using namespace casecross;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

DailySeries series_from(const StudyCalendar& cal, std::vector<double> values) {
  return DailySeries::from_values(cal, std::move(values));
}

// Direct block-mean verification against a decomposition.
void check_identities(const DailySeries& s, const TrendDecomposition& d, double tol = 1e-10) {
  const StudyCalendar& cal = s.calendar();
  for (int i = 0; i < cal.n_days(); ++i) {
    if (!s.observed(i)) continue;
    const auto k = static_cast<size_t>(i);
    CHECK(std::abs(s.value(i) - (d.yearly[k] + d.monthly[k] + d.weekly[k] + d.daily[k])) < tol);
  }
  std::vector<CompensatedSum> year_sum(static_cast<size_t>(cal.n_year_blocks()));
  std::vector<CompensatedSum> month_sum(static_cast<size_t>(cal.n_month_blocks()));
  std::vector<CompensatedSum> week_sum(static_cast<size_t>(cal.n_week_blocks()));
  std::vector<int> yn(year_sum.size(), 0), mn(month_sum.size(), 0), wn(week_sum.size(), 0);
  for (int i = 0; i < cal.n_days(); ++i) {
    if (!s.observed(i)) continue;
    const auto k = static_cast<size_t>(i);
    year_sum[static_cast<size_t>(cal.year_block_at(i))].add(d.monthly[k] + d.weekly[k] + d.daily[k]);
    month_sum[static_cast<size_t>(cal.month_block_at(i))].add(d.weekly[k] + d.daily[k]);
    week_sum[static_cast<size_t>(cal.week_block_at(i))].add(d.daily[k]);
    ++yn[static_cast<size_t>(cal.year_block_at(i))];
    ++mn[static_cast<size_t>(cal.month_block_at(i))];
    ++wn[static_cast<size_t>(cal.week_block_at(i))];
  }
  for (std::size_t b = 0; b < year_sum.size(); ++b)
    if (yn[b]) CHECK(std::abs(year_sum[b].value() / yn[b]) < tol);
  for (std::size_t b = 0; b < month_sum.size(); ++b)
    if (mn[b]) CHECK(std::abs(month_sum[b].value() / mn[b]) < tol);
  for (std::size_t b = 0; b < week_sum.size(); ++b)
    if (wn[b]) CHECK(std::abs(week_sum[b].value() / wn[b]) < tol);
}

}  // namespace

TEST_CASE("load_series fills the full period and maps absences to missing") {
  const StudyCalendar cal(Date(2000, 4, 1), Date(2010, 3, 31));
  std::ostringstream csv;
  csv << "date,o3\n";
  for (int i = 0; i < cal.n_days(); ++i) {
    if (cal.date_at(i) == Date(2005, 6, 15)) continue;  // omitted row
    csv << cal.date_at(i).to_string() << "," << (1.0 + 0.001 * i) << "\n";
  }
  std::istringstream in(csv.str());
  const DailySeries s = load_series(in, "o3", cal);
  CHECK(s.n_days() == 3652);
  CHECK(s.n_observed() == 3651);
  CHECK_FALSE(s.observed(cal.day_index(Date(2005, 6, 15))));
  CHECK(s.observed(cal.day_index(Date(2005, 6, 14))));
}

TEST_CASE("load_series rejects bad input") {
  const StudyCalendar cal(Date(2001, 1, 1), Date(2001, 1, 31));

  SUBCASE("duplicate date") {
    std::istringstream in("date,x\n2001-01-01,1\n2001-01-01,2\n");
    CHECK_THROWS_WITH_AS(load_series(in, "x", cal), doctest::Contains("2001-01-01"), data_error);
  }
  SUBCASE("date outside the period") {
    std::istringstream in("date,x\n2001-02-01,1\n");
    CHECK_THROWS_WITH_AS(load_series(in, "x", cal), doctest::Contains("outside"), data_error);
  }
  SUBCASE("unparseable value") {
    std::istringstream in("date,x\n2001-01-02,abc\n");
    CHECK_THROWS_WITH_AS(load_series(in, "x", cal), doctest::Contains("abc"), data_error);
  }
  SUBCASE("missing value column") {
    std::istringstream in("date,x\n2001-01-02,1\n");
    CHECK_THROWS_AS(load_series(in, "y", cal), data_error);
  }
  SUBCASE("empty cells become missing") {
    std::istringstream in("date,x\n2001-01-02,\n2001-01-03,4\n");
    const DailySeries s = load_series(in, "x", cal);
    CHECK_FALSE(s.observed(1));
    CHECK(s.value(2) == 4.0);
  }
}

TEST_CASE("iqr standardization matches the interpolated-quantile oracle") {
  const StudyCalendar cal(Date(2001, 1, 1), Date(2001, 1, 8));
  const DailySeries s = series_from(cal, {1, 2, 3, 4, 5, 6, 7, 8});
  const auto [scaled, iqr] = iqr_standardize(s);
  CHECK(iqr == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(scaled.value(6) == doctest::Approx(2.0).epsilon(1e-12));

  // output IQR is exactly 1, and a second pass is a no-op
  auto obs = scaled.observed_values();
  std::sort(obs.begin(), obs.end());
  CHECK(quantile_sorted(obs, 0.75) - quantile_sorted(obs, 0.25) ==
        doctest::Approx(1.0).epsilon(1e-12));
  const auto [twice, iqr2] = iqr_standardize(scaled);
  CHECK(iqr2 == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < cal.n_days(); ++i)
    CHECK(twice.value(i) == doctest::Approx(scaled.value(i)).epsilon(1e-12));
}

TEST_CASE("iqr standardization rejects degenerate scales") {
  const StudyCalendar cal(Date(2001, 1, 1), Date(2001, 1, 3));
  CHECK_THROWS_AS(iqr_standardize(series_from(cal, {5, 5, 5})), numeric_error);
  CHECK_THROWS_AS(iqr_standardize(series_from(cal, {5, kNaN, kNaN})), numeric_error);
}

TEST_CASE("decompose: constant series has null components") {
  const StudyCalendar cal(Date(2003, 2, 1), Date(2003, 3, 31));
  const DailySeries s = series_from(cal, std::vector<double>(static_cast<size_t>(cal.n_days()), 3.25));
  const TrendDecomposition d = decompose(s);
  for (int i = 0; i < cal.n_days(); ++i) {
    const auto k = static_cast<size_t>(i);
    CHECK(d.yearly[k] == doctest::Approx(3.25).epsilon(1e-14));
    CHECK(d.monthly[k] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(d.weekly[k] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(d.daily[k] == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("decompose: 14-day toy period matches the arithmetic oracle") {
  // 2005-06-06 is a Monday: one year block, one month block, two full weeks
  const StudyCalendar cal(Date(2005, 6, 6), Date(2005, 6, 19));
  std::vector<double> values(14);
  for (int i = 0; i < 14; ++i) values[static_cast<size_t>(i)] = i + 1.0;
  const TrendDecomposition d = decompose(series_from(cal, values));
  for (int i = 0; i < 14; ++i) {
    const auto k = static_cast<size_t>(i);
    CHECK(d.yearly[k] == doctest::Approx(7.5).epsilon(1e-12));
    CHECK(d.monthly[k] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.weekly[k] == doctest::Approx(i < 7 ? -3.5 : 3.5).epsilon(1e-12));
    CHECK(d.daily[k] == doctest::Approx((i % 7) - 3.0).epsilon(1e-12));
  }
}

TEST_CASE("decompose identities hold on synthetic series with missing days") {
  const StudyCalendar cal(Date(2000, 4, 1), Date(2004, 3, 31));
  Rng rng(20240401);
  DailySeries s = generate_synthetic_series(1.0, 0.5, 2.0, 0.3, cal, rng);
  // punch out ~5% of days
  std::vector<double> vals = s.values();
  for (auto& v : vals)
    if (rng.uniform01() < 0.05) v = kNaN;
  const DailySeries holey = DailySeries::from_values(cal, std::move(vals));
  check_identities(holey, decompose(holey));

  // missing days still carry block components but no daily residual
  const TrendDecomposition d = decompose(holey);
  for (int i = 0; i < cal.n_days(); ++i)
    if (!holey.observed(i)) {
      CHECK(std::isfinite(d.yearly[static_cast<size_t>(i)]));
      CHECK(std::isfinite(d.monthly[static_cast<size_t>(i)]));
      CHECK(std::isfinite(d.weekly[static_cast<size_t>(i)]));
      CHECK(std::isnan(d.daily[static_cast<size_t>(i)]));
    }
}

TEST_CASE("decompose is linear on series with identical missingness") {
  const StudyCalendar cal(Date(2001, 4, 1), Date(2002, 3, 31));
  Rng rng(7);
  const DailySeries s1 = generate_synthetic_series(0.8, 0.4, 1.5, 0.2, cal, rng);
  const DailySeries s2 = generate_synthetic_series(0.1, 0.9, 0.5, 1.0, cal, rng);
  const double a = 2.5, b = -1.25;
  std::vector<double> combo(static_cast<size_t>(cal.n_days()));
  for (std::size_t i = 0; i < combo.size(); ++i)
    combo[i] = a * s1.values()[i] + b * s2.values()[i];
  const TrendDecomposition dc = decompose(series_from(cal, combo));
  const TrendDecomposition d1 = decompose(s1);
  const TrendDecomposition d2 = decompose(s2);
  for (std::size_t i = 0; i < combo.size(); ++i) {
    CHECK(std::abs(dc.yearly[i] - (a * d1.yearly[i] + b * d2.yearly[i])) < 1e-10);
    CHECK(std::abs(dc.monthly[i] - (a * d1.monthly[i] + b * d2.monthly[i])) < 1e-10);
    CHECK(std::abs(dc.weekly[i] - (a * d1.weekly[i] + b * d2.weekly[i])) < 1e-10);
    CHECK(std::abs(dc.daily[i] - (a * d1.daily[i] + b * d2.daily[i])) < 1e-10);
  }
}

TEST_CASE("decompose names the first block without observed days") {
  const StudyCalendar cal(Date(2000, 4, 1), Date(2002, 3, 31));
  std::vector<double> vals(static_cast<size_t>(cal.n_days()), 1.0);

  SUBCASE("empty year block") {
    for (int i = 0; i < cal.n_days(); ++i)
      if (cal.year_block_at(i) == 1) vals[static_cast<size_t>(i)] = kNaN;
    CHECK_THROWS_WITH_AS(decompose(series_from(cal, vals)), doctest::Contains("FY2001"),
                         data_error);
  }
  SUBCASE("empty month block") {
    for (int i = 0; i < cal.n_days(); ++i)
      if (cal.date_at(i).year() == 2001 && cal.date_at(i).month() == 7)
        vals[static_cast<size_t>(i)] = kNaN;
    CHECK_THROWS_WITH_AS(decompose(series_from(cal, vals)), doctest::Contains("2001-07"),
                         data_error);
  }
}
