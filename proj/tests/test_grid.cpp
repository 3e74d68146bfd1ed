#include <doctest.h>

#include <cmath>
#include <map>

#include "casecross/grid.hpp"
#include "casecross/simulate.hpp"

using namespace casecross;

namespace {

// Synthetic AMI-like events with attribute columns driving the cohorts.
EventList synthetic_events(const StudyCalendar& cal, int count, std::uint64_t seed) {
  Rng rng(seed);
  EventList events;
  for (int i = 0; i < count; ++i) {
    Event e;
    e.date = cal.date_at(static_cast<int>(rng.uniform01() * cal.n_days()));
    e.attributes = {
        {"sex", rng.uniform01() < 0.6 ? "M" : "F"},
        {"age_band", rng.uniform01() < 0.5 ? "ge65" : "lt65"},
        {"subtype", rng.uniform01() < 0.45 ? "STEMI" : "NSTEMI"},
        {"diabetes", rng.uniform01() < 0.3 ? "1" : "0"},
        {"htn", rng.uniform01() < 0.5 ? "1" : "0"},
    };
    events.events.push_back(std::move(e));
  }
  return events;
}

std::vector<CohortFilter> five_cohorts() {
  return {
      {"Whole", {}},
      {"Male", {{"sex", "M"}}},
      {"Female", {{"sex", "F"}}},
      {"STEMI", {{"subtype", "STEMI"}}},
      {"Diabetes", {{"diabetes", "1"}}},
  };
}

}  // namespace

TEST_CASE("grid cell count and bonferroni threshold follow the product formula") {
  const StudyCalendar cal(Date(2000, 4, 1), Date(2002, 3, 31));
  Rng rng(5);
  GridSpec spec;
  spec.cohorts = five_cohorts();
  spec.exposures.push_back({"x1", generate_synthetic_series(0.5, 0.3, 1.0, 0.5, cal, rng)});
  spec.exposures.push_back({"x2", generate_synthetic_series(0.2, 0.6, 0.8, 0.7, cal, rng)});
  spec.lags = {0, 1, 2};
  CHECK(spec.n_cells() == 5u * 5u * 3u * 2u);
  CHECK(spec.alpha_bonferroni() == doctest::Approx(0.05 / 150.0).epsilon(1e-12));
}

TEST_CASE("run_grid: mechanics on a small synthetic study") {
  const StudyCalendar cal(Date(2000, 4, 1), Date(2003, 3, 31));
  Rng rng(17);
  GridSpec spec;
  spec.cohorts = five_cohorts();
  spec.exposures.push_back({"co", generate_synthetic_series(0.6, 0.3, 1.0, 0.6, cal, rng)});
  spec.exposures.push_back({"o3", generate_synthetic_series(0.9, 0.2, 0.7, 0.8, cal, rng)});
  spec.lags = {0, 2};
  spec.min_events = 10;
  const EventList events = synthetic_events(cal, 1200, 99);

  const GridResults results = run_grid(spec, events, 2);
  CHECK(results.rows.size() == spec.n_cells() * 2);  // two models
  CHECK(results.rows_for(ModelKind::model1).size() == spec.n_cells());
  CHECK(results.rows_for(ModelKind::model2).size() == spec.n_cells());

  // deterministic ordering and determinism across jobs
  const GridResults again = run_grid(spec, events, 1);
  REQUIRE(again.rows.size() == results.rows.size());
  for (std::size_t i = 0; i < results.rows.size(); ++i) {
    CHECK(results.rows[i].cohort == again.rows[i].cohort);
    CHECK(results.rows[i].season == again.rows[i].season);
    CHECK(results.rows[i].pollutant == again.rows[i].pollutant);
    CHECK(results.rows[i].lag == again.rows[i].lag);
    CHECK(results.rows[i].n == again.rows[i].n);
    const bool both_nan = std::isnan(results.rows[i].estimate) && std::isnan(again.rows[i].estimate);
    CHECK((both_nan || results.rows[i].estimate == again.rows[i].estimate));
  }

  // season N values partition the All-season N, per (cohort, pollutant, lag)
  std::map<std::tuple<std::string, std::string, int>, int> all_n, season_sum;
  for (const auto* row : results.rows_for(ModelKind::model1)) {
    const auto key = std::make_tuple(row->cohort, row->pollutant, row->lag);
    if (row->season == Season::All)
      all_n[key] = row->n;
    else
      season_sum[key] += row->n;
  }
  REQUIRE(!all_n.empty());
  for (const auto& [key, n] : all_n) CHECK(season_sum[key] == n);

  // flag implications on every row
  for (const auto& row : results.rows) {
    if (row.flag_bonferroni) CHECK(row.flag_01);
    if (row.flag_01) CHECK(row.flag_05);
    if (std::isfinite(row.p)) {
      CHECK(row.flag_05 == (row.p <= 0.05));
      CHECK(row.flag_01 == (row.p <= 0.01));
      CHECK(row.flag_bonferroni == (row.p <= results.alpha_bonferroni));
    }
  }

  // every fitted row satisfies the OR/CI identities
  for (const auto& row : results.rows) {
    if (!std::isfinite(row.estimate)) continue;
    CHECK(row.odds_ratio == doctest::Approx(std::exp(row.estimate)).epsilon(1e-12));
    CHECK(row.ci_low ==
          doctest::Approx(std::exp(row.estimate - kZ95 * row.se)).epsilon(1e-12));
    CHECK(row.ci_high ==
          doctest::Approx(std::exp(row.estimate + kZ95 * row.se)).epsilon(1e-12));
  }

  const GridSummaryReport report = summarize_grid(results);
  REQUIRE(report.per_model.size() == 2);
  for (const auto& m : report.per_model) {
    CHECK(m.n_rows == static_cast<int>(spec.n_cells()));
    CHECK(m.n_p01 <= m.n_p05);
    CHECK(m.n_bonferroni <= m.n_p01);
  }
  CHECK(std::isfinite(report.cross_model_correlation));
  CHECK(std::abs(report.cross_model_correlation) <= 1.0);
}

TEST_CASE("run_grid: sparse cohorts are skipped as underpowered") {
  const StudyCalendar cal(Date(2001, 4, 1), Date(2002, 3, 31));
  Rng rng(3);
  GridSpec spec;
  spec.cohorts = {{"Whole", {}}, {"Rare", {{"marker", "yes"}}}};
  spec.exposures.push_back({"x", generate_synthetic_series(0.4, 0.2, 0.8, 0.5, cal, rng)});
  spec.seasons = {Season::All};
  spec.lags = {0};
  spec.min_events = 10;

  EventList events = synthetic_events(cal, 300, 12);
  for (auto& e : events.events) e.attributes.emplace_back("marker", "no");
  events.events[0].attributes.back().second = "yes";  // a single Rare event

  const GridResults results = run_grid(spec, events);
  bool saw_rare = false;
  for (const auto& row : results.rows)
    if (row.cohort == "Rare") {
      saw_rare = true;
      CHECK(row.status == "underpowered");
      CHECK_FALSE(std::isfinite(row.estimate));
    }
  CHECK(saw_rare);
}

TEST_CASE("run_grid validates its spec and inputs") {
  const StudyCalendar cal(Date(2001, 4, 1), Date(2002, 3, 31));
  Rng rng(4);
  GridSpec spec;
  spec.cohorts = {{"Whole", {}}};
  spec.exposures.push_back({"x", generate_synthetic_series(0.4, 0.2, 0.8, 0.5, cal, rng)});

  CHECK_THROWS_AS(run_grid(spec, EventList{}), data_error);

  GridSpec bad_lag = spec;
  bad_lag.lags = {7};
  CHECK_THROWS_AS(run_grid(bad_lag, synthetic_events(cal, 50, 1)), data_error);

  GridSpec bad_model = spec;
  bad_model.models = {ModelKind::model3};
  CHECK_THROWS_AS(run_grid(bad_model, synthetic_events(cal, 50, 1)), data_error);
}
