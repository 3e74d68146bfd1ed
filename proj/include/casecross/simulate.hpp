#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <string>
#include <vector>

#include "casecross/calibrate.hpp"
#include "casecross/design.hpp"
#include "casecross/glm.hpp"
#include "casecross/rng.hpp"
#include "casecross/sampling.hpp"
#include "casecross/series.hpp"
#include "casecross/threads.hpp"

namespace casecross {

// The four analytic strategies compared by the size/power experiments.
enum class Strategy { model1, model2, model1_cal, model2_cal };

inline const char* strategy_label(Strategy s) {
  switch (s) {
    case Strategy::model1: return "model1";
    case Strategy::model2: return "model2";
    case Strategy::model1_cal: return "model1_cal";
    case Strategy::model2_cal: return "model2_cal";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& text) {
  if (text == "model1") return Strategy::model1;
  if (text == "model2") return Strategy::model2;
  if (text == "model1_cal" || text == "model1+calibration") return Strategy::model1_cal;
  if (text == "model2_cal" || text == "model2+calibration") return Strategy::model2_cal;
  throw data_error("unknown strategy: '" + text + "'");
}

// One simulation scenario. Event days are drawn with replacement with
// probability proportional to exp(beta * daily + gamma * (yearly + monthly
// + weekly)); each replicate analyses them at lag 0 with every strategy.
struct ScenarioSpec {
  double beta = 0.0;
  double gamma = 0.0;
  int n_events = 5000;
  int n_reps = 1000;
  std::vector<Strategy> strategies{Strategy::model1, Strategy::model2, Strategy::model1_cal,
                                   Strategy::model2_cal};
  double alpha0 = 0.05;
  std::uint64_t master_seed = 0;
  int calibration_B = 200;

  void validate() const {
    if (n_events < 1) throw data_error("scenario: n_events must be >= 1");
    if (n_reps < 1) throw data_error("scenario: n_reps must be >= 1");
    if (!(alpha0 > 0.0 && alpha0 < 1.0)) throw data_error("scenario: alpha0 must be in (0,1)");
    if (strategies.empty()) throw data_error("scenario: no strategies selected");
    if (calibration_B < 2) throw data_error("scenario: B must be >= 2");
  }
};

struct StrategyResult {
  Strategy strategy;
  std::vector<double> estimates;  // NaN where the replicate failed
  std::vector<double> p_values;
  int n_failed = 0;
  int rejection_count = 0;  // #{p <= alpha0} over successful replicates
  int denominator = 0;      // successful replicates
};

struct ScenarioSummary {
  ScenarioSpec spec;
  std::vector<StrategyResult> per_strategy;
  double wall_seconds = 0.0;
};

// Count of p-values at or below the criterion (ties count as rejections).
inline int summarize_size_power(std::span<const double> p_values, double alpha0) {
  int count = 0;
  for (double p : p_values)
    if (p <= alpha0) ++count;
  return count;
}

namespace detail {

struct ReplicateOutcome {
  std::vector<double> estimate, p;  // parallel to spec.strategies
};

}  // namespace detail

// Runs the full Monte-Carlo experiment: per replicate, draw event days from
// the weighted sampler, build the time-stratified table, fit every strategy,
// and aggregate rejection counts. Replicates use streams derived from
// (master_seed, r) and calibrated strategies from (master_seed, r, "cal"),
// so the summary is identical for any `jobs`.
//
// Calibrated strategies reference the scenario null with the hazard effect
// removed but the scenario's trend weighting kept (beta = 0, gamma as
// specified), which is what makes b_hat track the design bias when the
// trends confound.
inline ScenarioSummary run_scenario(const ScenarioSpec& spec, const DailySeries& series,
                                    const TrendDecomposition& decomp, int jobs = 1) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const TableBuilder builder(series, decomp);
  const EventDaySampler sampler(decomp, spec.beta, spec.gamma);
  const std::size_t n_strategies = spec.strategies.size();

  bool need_m1 = false, need_m2 = false, any_cal = false;
  for (Strategy s : spec.strategies) {
    need_m1 |= s == Strategy::model1 || s == Strategy::model1_cal;
    need_m2 |= s == Strategy::model2 || s == Strategy::model2_cal;
    any_cal |= s == Strategy::model1_cal || s == Strategy::model2_cal;
  }
  const ModelSpec m1 = ModelSpec::model1();
  const ModelSpec m2 = ModelSpec::model2();

  std::vector<detail::ReplicateOutcome> outcomes(static_cast<size_t>(spec.n_reps));

  parallel_for(static_cast<size_t>(spec.n_reps), jobs, [&](std::size_t r) {
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    detail::ReplicateOutcome& out = outcomes[r];
    out.estimate.assign(n_strategies, nan);
    out.p.assign(n_strategies, nan);

    Rng rng = derive_rng(spec.master_seed, {static_cast<std::uint64_t>(r)});
    EventList events;
    events.lag = 0;
    events.events.reserve(static_cast<size_t>(spec.n_events));
    for (int i = 0; i < spec.n_events; ++i) {
      const int day = sampler.draw_day_index(rng);
      events.events.push_back(Event{builder.calendar().date_at(day), {}});
    }

    CaseCrossoverTable table;
    try {
      table = builder.build(events);
    } catch (const data_error&) {
      return;  // whole replicate failed
    }

    bool have_fit1 = false, have_fit2 = false;
    FitResult fit1, fit2;
    if (need_m1) {
      try {
        fit1 = fit_logistic(table, m1);
        have_fit1 = true;
      } catch (const numeric_error&) {
      }
    }
    if (need_m2) {
      try {
        fit2 = fit_logistic(table, m2);
        have_fit2 = true;
      } catch (const numeric_error&) {
      }
    }

    std::vector<double> nulls1, nulls2;
    bool have_nulls1 = false, have_nulls2 = false;
    if (any_cal) {
      const std::uint64_t cal_seed =
          derive_seed(spec.master_seed, {static_cast<std::uint64_t>(r), kCalibrationStreamTag});
      for (Strategy s : spec.strategies) {
        try {
          if (s == Strategy::model1_cal && have_fit1) {
            nulls1 = detail::permute_null_fits_with(builder, decomp, spec.n_events, m1,
                                                    spec.calibration_B, cal_seed, 0, spec.gamma);
            have_nulls1 = true;
          } else if (s == Strategy::model2_cal && have_fit2) {
            nulls2 = detail::permute_null_fits_with(builder, decomp, spec.n_events, m2,
                                                    spec.calibration_B, cal_seed, 0, spec.gamma);
            have_nulls2 = true;
          }
        } catch (const numeric_error&) {
        }
      }
    }

    for (std::size_t s = 0; s < n_strategies; ++s) {
      try {
        switch (spec.strategies[s]) {
          case Strategy::model1:
            if (!have_fit1) break;
            out.estimate[s] = fit1.coef_of(fit1.target);
            out.p[s] = wald_inference(fit1, fit1.target).p;
            break;
          case Strategy::model2:
            if (!have_fit2) break;
            out.estimate[s] = fit2.coef_of(fit2.target);
            out.p[s] = wald_inference(fit2, fit2.target).p;
            break;
          case Strategy::model1_cal: {
            if (!have_fit1 || !have_nulls1) break;
            const CalibrationResult c = calibrate(fit1, nulls1);
            out.estimate[s] = c.beta_cal;
            out.p[s] = c.p_perm;
            break;
          }
          case Strategy::model2_cal: {
            if (!have_fit2 || !have_nulls2) break;
            const CalibrationResult c = calibrate(fit2, nulls2);
            out.estimate[s] = c.beta_cal;
            out.p[s] = c.p_perm;
            break;
          }
        }
      } catch (const numeric_error&) {
      }
    }
  });

  ScenarioSummary summary;
  summary.spec = spec;
  summary.per_strategy.resize(n_strategies);
  for (std::size_t s = 0; s < n_strategies; ++s) {
    StrategyResult& res = summary.per_strategy[s];
    res.strategy = spec.strategies[s];
    res.estimates.resize(static_cast<size_t>(spec.n_reps));
    res.p_values.resize(static_cast<size_t>(spec.n_reps));
    for (int r = 0; r < spec.n_reps; ++r) {
      res.estimates[static_cast<size_t>(r)] = outcomes[static_cast<size_t>(r)].estimate[s];
      const double p = outcomes[static_cast<size_t>(r)].p[s];
      res.p_values[static_cast<size_t>(r)] = p;
      if (std::isnan(p)) {
        ++res.n_failed;
      } else {
        ++res.denominator;
        if (p <= spec.alpha0) ++res.rejection_count;
      }
    }
    if (res.n_failed * 20 > spec.n_reps)
      throw numeric_error(std::string("scenario unstable: strategy ") +
                          strategy_label(res.strategy) + " failed in " +
                          std::to_string(res.n_failed) + " of " + std::to_string(spec.n_reps) +
                          " replicates");
  }
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return summary;
}

// Synthetic daily series with yearly and monthly sine trends, a persistent
// weekly level (AR(1) across ISO weeks, coefficient 0.7, unit stationary
// variance) and white daily noise. Deterministic given the stream.
inline DailySeries generate_synthetic_series(double year_amp, double month_amp, double week_amp,
                                             double noise_sd, const StudyCalendar& period,
                                             Rng& stream) {
  if (year_amp < 0 || month_amp < 0 || week_amp < 0 || noise_sd < 0)
    throw data_error("synthetic series: amplitudes must be non-negative");
  constexpr double two_pi = 6.283185307179586476925286766559;
  constexpr double ar = 0.7;
  const double innovation_sd = std::sqrt(1.0 - ar * ar);

  std::vector<double> week_level(static_cast<size_t>(period.n_week_blocks()));
  for (std::size_t w = 0; w < week_level.size(); ++w)
    week_level[w] = w == 0 ? stream.normal() : ar * week_level[w - 1] + innovation_sd * stream.normal();

  std::vector<double> values(static_cast<size_t>(period.n_days()));
  for (int i = 0; i < period.n_days(); ++i) {
    const double t = static_cast<double>(i);
    values[static_cast<size_t>(i)] =
        year_amp * std::sin(two_pi * t / 365.25) + month_amp * std::sin(two_pi * t / 30.44) +
        week_amp * week_level[static_cast<size_t>(period.week_block_at(i))] +
        noise_sd * stream.normal();
  }
  return DailySeries::from_values(period, std::move(values));
}

// Scenario config: line-oriented `key = value`.
struct ScenarioConfig {
  std::string pollutant_file;
  std::string column;  // empty = the single non-date column
  bool standardize = true;
  ScenarioSpec spec;
  bool seed_given = false;
};

inline ScenarioConfig parse_scenario_config(std::istream& in) {
  ScenarioConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw data_error("scenario config line " + std::to_string(line_no) +
                       ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      if (key == "pollutant_file") {
        cfg.pollutant_file = value;
      } else if (key == "column") {
        cfg.column = value;
      } else if (key == "standardize") {
        cfg.standardize = value == "true" || value == "1" || value == "yes";
      } else if (key == "beta") {
        cfg.spec.beta = std::stod(value);
      } else if (key == "gamma") {
        cfg.spec.gamma = std::stod(value);
      } else if (key == "n_events") {
        cfg.spec.n_events = std::stoi(value);
      } else if (key == "n_reps") {
        cfg.spec.n_reps = std::stoi(value);
      } else if (key == "alpha0") {
        cfg.spec.alpha0 = std::stod(value);
      } else if (key == "B") {
        cfg.spec.calibration_B = std::stoi(value);
      } else if (key == "seed") {
        cfg.spec.master_seed = std::stoull(value);
        cfg.seed_given = true;
      } else if (key == "strategies") {
        cfg.spec.strategies.clear();
        std::string token;
        for (char c : value + ",") {
          if (c == ',') {
            token = trim(token);
            if (!token.empty()) cfg.spec.strategies.push_back(parse_strategy(token));
            token.clear();
          } else {
            token.push_back(c);
          }
        }
      } else {
        throw data_error("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw data_error("scenario config line " + std::to_string(line_no) + ": bad value '" +
                       value + "' for " + key);
    } catch (const std::out_of_range&) {
      throw data_error("scenario config line " + std::to_string(line_no) + ": bad value '" +
                       value + "' for " + key);
    }
  }
  if (cfg.pollutant_file.empty())
    throw data_error("scenario config: pollutant_file is required");
  return cfg;
}

}  // namespace casecross
