#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "casecross/calendar.hpp"
#include "casecross/design.hpp"
#include "casecross/glm.hpp"
#include "casecross/math.hpp"
#include "casecross/series.hpp"
#include "casecross/threads.hpp"

namespace casecross {

// Sub-cohort membership: every listed attribute must match exactly; an empty
// requirement list admits every event (the whole cohort).
struct CohortFilter {
  std::string name;
  std::vector<std::pair<std::string, std::string>> required;

  bool matches(const Event& e) const {
    for (const auto& [attr, value] : required)
      if (e.attribute(attr) != value) return false;
    return true;
  }
};

struct ExposureInput {
  std::string name;
  DailySeries series;
};

// The empirical-study grid: cohorts x seasons x lags x exposures, fit with
// each selected model. The Bonferroni criterion divides alpha0 by the number
// of grid cells.
struct GridSpec {
  std::vector<CohortFilter> cohorts;
  std::vector<Season> seasons{Season::All, Season::Spring, Season::Summer, Season::Autumn,
                              Season::Winter};
  std::vector<int> lags{0, 1, 2, 3, 4};
  std::vector<ExposureInput> exposures;
  std::vector<ModelKind> models{ModelKind::model1, ModelKind::model2};
  double alpha0 = 0.05;
  int min_events = 10;
  SeasonRule season_rule{};

  std::size_t n_cells() const {
    return cohorts.size() * seasons.size() * lags.size() * exposures.size();
  }
  double alpha_bonferroni() const { return alpha0 / static_cast<double>(n_cells()); }

  void validate() const {
    if (cohorts.empty()) throw data_error("grid: no cohorts defined");
    if (seasons.empty()) throw data_error("grid: no seasons selected");
    if (lags.empty()) throw data_error("grid: no lags selected");
    if (exposures.empty()) throw data_error("grid: no exposure series");
    if (models.empty()) throw data_error("grid: no models selected");
    for (int lag : lags)
      if (lag < 0 || lag > 4) throw data_error("grid: lag must be in 0..4");
    for (ModelKind m : models)
      if (m != ModelKind::model1 && m != ModelKind::model2)
        throw data_error("grid: only model1 and model2 are supported");
  }
};

struct GridRow {
  std::string cohort;
  Season season = Season::All;
  int n = 0;  // retained events (strata) in the cell
  std::string pollutant;
  int lag = 0;
  ModelKind model = ModelKind::model1;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double odds_ratio = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  bool flag_05 = false, flag_01 = false, flag_bonferroni = false;
  std::string status;  // ok | nonconverged | underpowered | collinear | separated | empty
};

struct GridResults {
  std::vector<GridRow> rows;  // ordered by (model, cohort, season, exposure, lag)
  double alpha_bonferroni = 0.0;

  std::vector<const GridRow*> rows_for(ModelKind model) const {
    std::vector<const GridRow*> out;
    for (const auto& r : rows)
      if (r.model == model) out.push_back(&r);
    return out;
  }
};

// Runs every grid cell: filter events by cohort and by the season of the
// event date, apply the lag, build the table, fit, flag. Cells never abort
// the run; failures land in `status`.
inline GridResults run_grid(const GridSpec& spec, const EventList& events, int jobs = 1) {
  spec.validate();
  if (events.events.empty()) throw data_error("grid: empty event list");

  struct Prepared {
    std::string name;
    const DailySeries* series;
    TrendDecomposition decomp;
    std::unique_ptr<TableBuilder> builder;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(spec.exposures.size());
  for (const auto& exposure : spec.exposures)
    prepared.push_back({exposure.name, &exposure.series, decompose(exposure.series), nullptr});
  for (auto& p : prepared) p.builder = std::make_unique<TableBuilder>(*p.series, p.decomp);

  struct Cell {
    std::size_t cohort, season, exposure;
    int lag;
  };
  std::vector<Cell> cells;
  cells.reserve(spec.n_cells());
  for (std::size_t c = 0; c < spec.cohorts.size(); ++c)
    for (std::size_t s = 0; s < spec.seasons.size(); ++s)
      for (std::size_t e = 0; e < spec.exposures.size(); ++e)
        for (int lag : spec.lags) cells.push_back({c, s, e, lag});

  const double alpha_bonf = spec.alpha_bonferroni();
  std::vector<std::vector<GridRow>> cell_rows(cells.size());

  parallel_for(cells.size(), jobs, [&](std::size_t idx) {
    const Cell& cell = cells[idx];
    const CohortFilter& cohort = spec.cohorts[cell.cohort];
    const Season season = spec.seasons[cell.season];
    const Prepared& exposure = prepared[cell.exposure];

    EventList selected;
    selected.lag = cell.lag;
    for (const Event& e : events.events) {
      if (!cohort.matches(e)) continue;
      if (season != Season::All && spec.season_rule.of(e.date) != season) continue;
      selected.events.push_back(e);
    }

    GridRow base;
    base.cohort = cohort.name;
    base.season = season;
    base.pollutant = exposure.name;
    base.lag = cell.lag;

    CaseCrossoverTable table;
    bool have_table = false;
    if (!selected.events.empty()) {
      try {
        table = exposure.builder->build(selected);
        have_table = true;
      } catch (const data_error&) {
        // all strata dropped
      }
    }
    base.n = have_table ? table.n_strata : 0;

    for (ModelKind model : spec.models) {
      GridRow row = base;
      row.model = model;
      if (!have_table) {
        row.status = "empty";
      } else if (table.n_strata < spec.min_events) {
        row.status = "underpowered";
      } else {
        try {
          const ModelSpec ms =
              model == ModelKind::model1 ? ModelSpec::model1() : ModelSpec::model2();
          const FitResult fit = fit_logistic(table, ms);
          const int j = fit.index_of(fit.target);
          row.estimate = fit.coef[static_cast<size_t>(j)];
          row.se = fit.se[static_cast<size_t>(j)];
          row.odds_ratio = fit.odds_ratio[static_cast<size_t>(j)];
          row.ci_low = fit.ci_low[static_cast<size_t>(j)];
          row.ci_high = fit.ci_high[static_cast<size_t>(j)];
          row.p = fit.p[static_cast<size_t>(j)];
          row.status = fit.converged ? "ok" : "nonconverged";
          if (std::isfinite(row.p)) {
            row.flag_05 = row.p <= 0.05;
            row.flag_01 = row.p <= 0.01;
            row.flag_bonferroni = row.p <= alpha_bonf;
          }
        } catch (const collinearity_error&) {
          row.status = "collinear";
        } catch (const separation_error&) {
          row.status = "separated";
        } catch (const numeric_error&) {
          row.status = "numeric_failure";
        } catch (const data_error&) {
          row.status = "empty";
        }
      }
      cell_rows[idx].push_back(std::move(row));
    }
  });

  GridResults results;
  results.alpha_bonferroni = alpha_bonf;
  results.rows.reserve(cells.size() * spec.models.size());
  for (std::size_t m = 0; m < spec.models.size(); ++m)
    for (std::size_t idx = 0; idx < cells.size(); ++idx)
      results.rows.push_back(cell_rows[idx][m]);
  return results;
}

struct GridModelSummary {
  ModelKind model;
  int n_rows = 0;
  int n_positive = 0, n_negative = 0;  // OR > 1 vs OR < 1 among fitted cells
  int n_p05 = 0, n_p01 = 0, n_bonferroni = 0;
};

struct GridSummaryReport {
  std::vector<GridModelSummary> per_model;
  // Pearson correlation of model-1 vs model-2 estimates over cells where
  // both produced one; NaN when undefined.
  double cross_model_correlation = std::numeric_limits<double>::quiet_NaN();
};

inline GridSummaryReport summarize_grid(const GridResults& results) {
  GridSummaryReport report;
  std::vector<ModelKind> models;
  for (const auto& row : results.rows) {
    bool seen = false;
    for (ModelKind m : models) seen |= m == row.model;
    if (!seen) models.push_back(row.model);
  }
  for (ModelKind m : models) {
    GridModelSummary s;
    s.model = m;
    for (const auto& row : results.rows) {
      if (row.model != m) continue;
      ++s.n_rows;
      if (std::isfinite(row.estimate)) {
        if (row.estimate > 0) ++s.n_positive;
        if (row.estimate < 0) ++s.n_negative;
      }
      s.n_p05 += row.flag_05;
      s.n_p01 += row.flag_01;
      s.n_bonferroni += row.flag_bonferroni;
    }
    report.per_model.push_back(s);
  }
  const auto m1 = results.rows_for(ModelKind::model1);
  const auto m2 = results.rows_for(ModelKind::model2);
  if (m1.size() == m2.size() && !m1.empty()) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < m1.size(); ++i)
      if (std::isfinite(m1[i]->estimate) && std::isfinite(m2[i]->estimate)) {
        x.push_back(m1[i]->estimate);
        y.push_back(m2[i]->estimate);
      }
    if (x.size() >= 3) report.cross_model_correlation = pearson_correlation(x, y);
  }
  return report;
}

}  // namespace casecross
