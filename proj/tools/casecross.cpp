// casecross: file-based front end for the case-crossover toolkit.
//
// Subcommands: decompose, referents, analyze, calibrate, simulate, grid,
// synth. Every run that writes files leaves a manifest.txt recording the
// resolved parameters, input digests and seed, so results can be replayed
// byte for byte.

#include <CLI11.hpp>

#include <chrono>
#include <clocale>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "casecross/casecross.hpp"

namespace fs = std::filesystem;
using namespace casecross;

namespace {

std::string fmt_opt(double x) { return std::isfinite(x) ? format_double(x) : std::string(); }

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::uint64_t draw_random_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

// Paths inside config files resolve relative to the config's directory.
std::string resolve_relative(const std::string& config_path, const std::string& file) {
  fs::path p(file);
  if (p.is_absolute()) return file;
  return (fs::path(config_path).parent_path() / p).string();
}

StudyCalendar calendar_for(const std::string& input, const std::string& start,
                           const std::string& end) {
  if (!start.empty() && !end.empty()) return {parse_date(start), parse_date(end)};
  if (start.empty() != end.empty())
    throw data_error("provide both --start and --end, or neither");
  return infer_calendar(input);
}

struct LoadedSeries {
  DailySeries series;
  TrendDecomposition decomp;
  double iqr = 1.0;
  bool standardized = false;
};

LoadedSeries load_and_prepare(const std::string& input, const std::string& column,
                              const StudyCalendar& cal, bool standardize) {
  DailySeries series = load_series_file(input, column, cal);
  double iqr = 1.0;
  if (standardize) {
    auto [scaled, found_iqr] = iqr_standardize(series);
    series = std::move(scaled);
    iqr = found_iqr;
  }
  TrendDecomposition decomp = decompose(series);
  return {std::move(series), std::move(decomp), iqr, standardize};
}

void write_fit_csv(const fs::path& path, const FitResult& fit) {
  CsvWriter out(path.string());
  out.row({"model", "coef", "estimate", "se", "z", "p", "or", "ci_low", "ci_high", "loglik",
           "converged"});
  for (std::size_t j = 0; j < fit.names.size(); ++j)
    out.row({fit.model, fit.names[j], fmt_opt(fit.coef[j]), fmt_opt(fit.se[j]),
             fmt_opt(fit.z[j]), fmt_opt(fit.p[j]), fmt_opt(fit.odds_ratio[j]),
             fmt_opt(fit.ci_low[j]), fmt_opt(fit.ci_high[j]), format_double(fit.loglik),
             fit.converged ? "1" : "0"});
}

void write_table_csv(const fs::path& path, const CaseCrossoverTable& table) {
  CsvWriter out(path.string());
  std::vector<std::string> header{"stratum", "date",    "y",     "exposure",
                                  "yearly",  "monthly", "weekly", "daily"};
  for (const auto& [name, col] : table.covariates) header.push_back(name);
  out.row(header);
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    std::vector<std::string> row{std::to_string(table.stratum[r]), table.date[r].to_string(),
                                 format_double(table.y[r]),        fmt_opt(table.exposure[r]),
                                 fmt_opt(table.yearly[r]),         fmt_opt(table.monthly[r]),
                                 fmt_opt(table.weekly[r]),         fmt_opt(table.daily[r])};
    for (const auto& [name, col] : table.covariates) row.push_back(fmt_opt(col[r]));
    out.row(row);
  }
}

// --covariate name=path[:column]
struct CovariateArg {
  std::string name, path, column;
};

CovariateArg parse_covariate_arg(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw data_error("bad --covariate '" + text + "': expected name=path[:column]");
  CovariateArg arg;
  arg.name = text.substr(0, eq);
  const std::string rest = text.substr(eq + 1);
  // a colon after the final path separator introduces the column name
  const auto slash = rest.find_last_of('/');
  const auto colon = rest.find(':', slash == std::string::npos ? 0 : slash + 1);
  if (colon != std::string::npos) {
    arg.path = rest.substr(0, colon);
    arg.column = rest.substr(colon + 1);
  } else {
    arg.path = rest;
  }
  if (arg.path.empty()) throw data_error("bad --covariate '" + text + "': empty path");
  return arg;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text + sep) {
    if (c == sep) {
      const auto a = cur.find_first_not_of(" \t");
      const auto b = cur.find_last_not_of(" \t");
      if (a != std::string::npos) out.push_back(cur.substr(a, b - a + 1));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

std::vector<int> parse_lags(const std::string& text) {
  std::vector<int> lags;
  for (const auto& token : split_list(text, ',')) {
    const auto dash = token.find('-');
    if (dash != std::string::npos && dash > 0) {
      const int lo = std::stoi(token.substr(0, dash));
      const int hi = std::stoi(token.substr(dash + 1));
      for (int k = lo; k <= hi; ++k) lags.push_back(k);
    } else {
      lags.push_back(std::stoi(token));
    }
  }
  return lags;
}

ModelSpec model_spec_from(const std::string& model, const std::string& custom_columns,
                          const std::vector<std::string>& covariate_names) {
  if (model == "1") return ModelSpec::model1(covariate_names);
  if (model == "2") return ModelSpec::model2(covariate_names);
  if (model == "3") return ModelSpec::model3(covariate_names);
  if (model == "custom") {
    const auto cols = split_list(custom_columns, ',');
    if (cols.empty()) throw data_error("--model custom requires --columns");
    return ModelSpec::custom(cols, covariate_names);
  }
  throw data_error("unknown model '" + model + "' (expected 1, 2, 3 or custom)");
}

// ---------------------------------------------------------------- synth ----

int cmd_synth(const std::string& out, const std::string& start, const std::string& end,
              double year_amp, double month_amp, double week_amp, double noise_sd,
              const std::string& column, std::optional<std::uint64_t> seed_flag) {
  Timer timer;
  const std::uint64_t seed = seed_flag.value_or(draw_random_seed());
  const StudyCalendar cal(parse_date(start), parse_date(end));
  Rng rng = derive_rng(seed, {});
  const DailySeries series =
      generate_synthetic_series(year_amp, month_amp, week_amp, noise_sd, cal, rng);

  const fs::path dir = prepare_out_dir(out);
  {
    CsvWriter csv((dir / "series.csv").string());
    csv.row({"date", column});
    for (int i = 0; i < cal.n_days(); ++i)
      csv.row({cal.date_at(i).to_string(), format_double(series.value(i))});
  }

  RunManifest manifest;
  manifest.command = "synth";
  manifest.seed = seed;
  manifest.uses_seed = true;
  manifest.add_param("start", start);
  manifest.add_param("end", end);
  manifest.add_param("year_amp", format_double(year_amp));
  manifest.add_param("month_amp", format_double(month_amp));
  manifest.add_param("week_amp", format_double(week_amp));
  manifest.add_param("noise_sd", format_double(noise_sd));
  manifest.add_param("column", column);
  manifest.wall_seconds = timer.seconds();
  manifest.write(dir);
  std::cout << "wrote " << (dir / "series.csv").string() << " (" << cal.n_days()
            << " days, seed " << seed << ")\n";
  return 0;
}

// ------------------------------------------------------------ decompose ----

int cmd_decompose(const std::string& input, const std::string& column, const std::string& start,
                  const std::string& end, bool standardize, const std::string& out) {
  Timer timer;
  const StudyCalendar cal = calendar_for(input, start, end);
  const LoadedSeries prepared = load_and_prepare(input, column, cal, standardize);

  const fs::path dir = prepare_out_dir(out);
  {
    CsvWriter csv((dir / "decomposition.csv").string());
    csv.row({"date", "value", "yearly", "monthly", "weekly", "daily"});
    for (int i = 0; i < cal.n_days(); ++i) {
      const auto k = static_cast<size_t>(i);
      csv.row({cal.date_at(i).to_string(),
               prepared.series.observed(i) ? format_double(prepared.series.value(i)) : "",
               format_double(prepared.decomp.yearly[k]), format_double(prepared.decomp.monthly[k]),
               format_double(prepared.decomp.weekly[k]), fmt_opt(prepared.decomp.daily[k])});
    }
  }

  RunManifest manifest;
  manifest.command = "decompose";
  manifest.add_param("column", column.empty() ? "(auto)" : column);
  manifest.add_param("start", cal.start().to_string());
  manifest.add_param("end", cal.end().to_string());
  manifest.add_param("standardize", standardize ? "true" : "false");
  if (standardize) manifest.add_param("iqr", format_double(prepared.iqr));
  manifest.input_files.push_back(input);
  manifest.wall_seconds = timer.seconds();
  manifest.write(dir);
  std::cout << "wrote " << (dir / "decomposition.csv").string() << "\n";
  return 0;
}

// ------------------------------------------------------------ referents ----

int cmd_referents(const std::string& date_text, const std::string& out) {
  const Date hazard = parse_date(date_text);
  const auto referents = referent_days(hazard);
  if (out.empty()) {
    for (Date d : referents) std::cout << d.to_string() << "\n";
    return 0;
  }
  Timer timer;
  const fs::path dir = prepare_out_dir(out);
  {
    CsvWriter csv((dir / "referents.csv").string());
    csv.row({"date"});
    for (Date d : referents) csv.row({d.to_string()});
  }
  RunManifest manifest;
  manifest.command = "referents";
  manifest.add_param("date", date_text);
  manifest.wall_seconds = timer.seconds();
  manifest.write(dir);
  std::cout << "wrote " << (dir / "referents.csv").string() << "\n";
  return 0;
}

// -------------------------------------------------------------- analyze ----

struct AnalyzeInputs {
  LoadedSeries prepared;
  std::vector<std::pair<std::string, DailySeries>> covariate_series;
  EventList events;
  CaseCrossoverTable table;
  ModelSpec spec;
};

AnalyzeInputs assemble_analysis(const std::string& input, const std::string& column,
                                const std::string& start, const std::string& end,
                                const std::string& events_path, int lag,
                                const std::string& model, const std::string& custom_columns,
                                const std::vector<std::string>& covariate_args,
                                const std::string& covariate_columns, bool standardize) {
  const StudyCalendar cal = calendar_for(input, start, end);
  LoadedSeries prepared = load_and_prepare(input, column, cal, standardize);

  std::vector<std::pair<std::string, DailySeries>> covariate_series;
  std::vector<std::string> covariate_names;
  // --covariates: further columns of the input file
  for (const auto& name : split_list(covariate_columns, ',')) {
    covariate_series.emplace_back(name, load_series_file(input, name, cal));
    covariate_names.push_back(name);
  }
  // --covariate: external daily series files
  for (const auto& text : covariate_args) {
    const CovariateArg arg = parse_covariate_arg(text);
    covariate_series.emplace_back(arg.name, load_series_file(arg.path, arg.column, cal));
    covariate_names.push_back(arg.name);
  }

  EventList events = load_events_file(events_path, lag);
  std::vector<std::pair<std::string, const DailySeries*>> covariate_ptrs;
  for (const auto& [name, series] : covariate_series) covariate_ptrs.emplace_back(name, &series);

  CaseCrossoverTable table =
      build_table(events, prepared.series, prepared.decomp, covariate_ptrs);
  ModelSpec spec = model_spec_from(model, custom_columns, covariate_names);
  return {std::move(prepared), std::move(covariate_series), std::move(events), std::move(table),
          std::move(spec)};
}

void report_drops(const CaseCrossoverTable& table, RunManifest& manifest) {
  manifest.add_param("n_strata", std::to_string(table.n_strata));
  manifest.add_param("dropped_strata", std::to_string(table.dropped_strata));
  manifest.add_param("dropped_referent_rows", std::to_string(table.dropped_referent_rows));
  manifest.add_param("out_of_window_events", std::to_string(table.out_of_window_events));
  std::cout << "strata: " << table.n_strata << " (dropped " << table.dropped_strata
            << ", out-of-window events " << table.out_of_window_events
            << ", dropped referent rows " << table.dropped_referent_rows << ")\n";
}

int cmd_analyze(const std::string& input, const std::string& column, const std::string& start,
                const std::string& end, const std::string& events_path, int lag,
                const std::string& model, const std::string& custom_columns,
                const std::vector<std::string>& covariate_args,
                const std::string& covariate_columns, bool standardize, bool export_table,
                const std::string& out) {
  Timer timer;
  AnalyzeInputs a = assemble_analysis(input, column, start, end, events_path, lag, model,
                                      custom_columns, covariate_args, covariate_columns,
                                      standardize);
  const FitResult fit = fit_logistic(a.table, a.spec);

  const fs::path dir = prepare_out_dir(out);
  write_fit_csv(dir / "fit.csv", fit);
  if (export_table) write_table_csv(dir / "table.csv", a.table);

  RunManifest manifest;
  manifest.command = "analyze";
  manifest.add_param("column", column.empty() ? "(auto)" : column);
  manifest.add_param("lag", std::to_string(lag));
  manifest.add_param("model", model);
  manifest.add_param("standardize", standardize ? "true" : "false");
  if (standardize) manifest.add_param("iqr", format_double(a.prepared.iqr));
  report_drops(a.table, manifest);
  manifest.input_files.push_back(input);
  manifest.input_files.push_back(events_path);
  for (const auto& text : covariate_args)
    manifest.input_files.push_back(parse_covariate_arg(text).path);
  manifest.wall_seconds = timer.seconds();
  manifest.write(dir);

  const auto w = wald_inference(fit, fit.target);
  std::cout << fit.model << " " << fit.target << ": OR " << format_double(w.odds_ratio)
            << " (95% CI " << format_double(w.ci_low) << ", " << format_double(w.ci_high)
            << "), p " << format_double(w.p) << (fit.converged ? "" : " [not converged]")
            << "\n";
  std::cout << "wrote " << (dir / "fit.csv").string() << "\n";
  return 0;
}

// ------------------------------------------------------------ calibrate ----

int cmd_calibrate(const std::string& input, const std::string& column, const std::string& start,
                  const std::string& end, const std::string& events_path, int lag,
                  const std::string& model, const std::string& custom_columns,
                  const std::vector<std::string>& covariate_args,
                  const std::string& covariate_columns, bool standardize, int B,
                  double null_gamma, bool dump_null, std::optional<std::uint64_t> seed_flag,
                  const std::string& out) {
  Timer timer;
  if (B < 2) throw data_error("--B must be >= 2");
  AnalyzeInputs a = assemble_analysis(input, column, start, end, events_path, lag, model,
                                      custom_columns, covariate_args, covariate_columns,
                                      standardize);
  const FitResult fit = fit_logistic(a.table, a.spec);

  const std::uint64_t seed = seed_flag.value_or(draw_random_seed());
  const int n_events = static_cast<int>(a.events.events.size());
  std::vector<std::pair<std::string, const DailySeries*>> covariate_ptrs;
  for (const auto& [name, series] : a.covariate_series) covariate_ptrs.emplace_back(name, &series);
  const auto nulls = permute_null_fits(n_events, a.prepared.series, a.prepared.decomp, a.spec, B,
                                       seed, lag, null_gamma, covariate_ptrs);
  const CalibrationResult cal = calibrate(fit, nulls);

  const fs::path dir = prepare_out_dir(out);
  write_fit_csv(dir / "fit.csv", fit);
  {
    CsvWriter csv((dir / "calibration.csv").string());
    csv.row({"b_hat", "beta_obs", "beta_cal", "perm_sd", "p_perm", "B_requested",
             "B_successful"});
    csv.row({format_double(cal.b_hat), format_double(cal.beta_obs), format_double(cal.beta_cal),
             format_double(cal.perm_sd), format_double(cal.p_perm), std::to_string(B),
             std::to_string(cal.null_estimates.size())});
  }
  if (dump_null) {
    CsvWriter csv((dir / "null_estimates.csv").string());
    csv.row({"iteration", "estimate"});
    for (std::size_t i = 0; i < cal.null_estimates.size(); ++i)
      csv.row({std::to_string(i + 1), format_double(cal.null_estimates[i])});
  }

  RunManifest manifest;
  manifest.command = "calibrate";
  manifest.seed = seed;
  manifest.uses_seed = true;
  manifest.add_param("column", column.empty() ? "(auto)" : column);
  manifest.add_param("lag", std::to_string(lag));
  manifest.add_param("model", model);
  manifest.add_param("B", std::to_string(B));
  manifest.add_param("null_gamma", format_double(null_gamma));
  manifest.add_param("standardize", standardize ? "true" : "false");
  report_drops(a.table, manifest);
  manifest.input_files.push_back(input);
  manifest.input_files.push_back(events_path);
  manifest.wall_seconds = timer.seconds();
  manifest.write(dir);

  std::cout << "beta_obs " << format_double(cal.beta_obs) << ", b_hat " << format_double(cal.b_hat)
            << ", beta_cal " << format_double(cal.beta_cal) << ", p_perm "
            << format_double(cal.p_perm) << " (B " << cal.null_estimates.size() << "/" << B
            << ")\n";
  std::cout << "wrote " << (dir / "calibration.csv").string() << "\n";
  return 0;
}

// ------------------------------------------------------------- simulate ----

int cmd_simulate(const std::string& config_path, const std::string& out, int jobs,
                 std::optional<std::uint64_t> seed_flag) {
  Timer timer;
  std::ifstream config_in(config_path);
  if (!config_in) throw data_error("cannot open config: " + config_path);
  ScenarioConfig cfg = parse_scenario_config(config_in);

  std::uint64_t seed;
  if (seed_flag)
    seed = *seed_flag;
  else if (cfg.seed_given)
    seed = cfg.spec.master_seed;
  else
    seed = draw_random_seed();
  cfg.spec.master_seed = seed;

  const std::string pollutant_path = resolve_relative(config_path, cfg.pollutant_file);
  const StudyCalendar cal = infer_calendar(pollutant_path);
  const LoadedSeries prepared =
      load_and_prepare(pollutant_path, cfg.column, cal, cfg.standardize);

  const ScenarioSummary summary = run_scenario(cfg.spec, prepared.series, prepared.decomp, jobs);

  const fs::path dir = prepare_out_dir(out);
  {
    CsvWriter csv((dir / "summary.csv").string());
    csv.row({"strategy", "rejections", "denominator"});
    for (const auto& s : summary.per_strategy)
      csv.row({strategy_label(s.strategy), std::to_string(s.rejection_count),
               std::to_string(s.denominator)});
  }
  {
    CsvWriter csv((dir / "estimates.csv").string());
    csv.row({"replicate", "strategy", "estimate", "p"});
    for (int r = 0; r < cfg.spec.n_reps; ++r)
      for (const auto& s : summary.per_strategy)
        csv.row({std::to_string(r + 1), strategy_label(s.strategy),
                 fmt_opt(s.estimates[static_cast<size_t>(r)]),
                 fmt_opt(s.p_values[static_cast<size_t>(r)])});
  }

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.seed = seed;
  manifest.uses_seed = true;
  manifest.add_param("beta", format_double(cfg.spec.beta));
  manifest.add_param("gamma", format_double(cfg.spec.gamma));
  manifest.add_param("n_events", std::to_string(cfg.spec.n_events));
  manifest.add_param("n_reps", std::to_string(cfg.spec.n_reps));
  manifest.add_param("alpha0", format_double(cfg.spec.alpha0));
  manifest.add_param("B", std::to_string(cfg.spec.calibration_B));
  manifest.add_param("standardize", cfg.standardize ? "true" : "false");
  std::string strategies;
  for (const auto& s : summary.per_strategy)
    strategies += std::string(strategies.empty() ? "" : ",") + strategy_label(s.strategy);
  manifest.add_param("strategies", strategies);
  manifest.add_param("jobs", std::to_string(jobs));
  manifest.input_files.push_back(config_path);
  manifest.input_files.push_back(pollutant_path);
  manifest.wall_seconds = timer.seconds();
  manifest.write(dir);

  for (const auto& s : summary.per_strategy)
    std::cout << strategy_label(s.strategy) << ": " << s.rejection_count << "/" << s.denominator
              << " rejections at alpha0 " << format_double(cfg.spec.alpha0) << "\n";
  std::cout << "wrote " << (dir / "summary.csv").string() << "\n";
  return 0;
}

// ----------------------------------------------------------------- grid ----

int cmd_grid(const std::string& config_path, const std::string& out, int jobs) {
  Timer timer;
  std::ifstream config_in(config_path);
  if (!config_in) throw data_error("cannot open config: " + config_path);
  const KeyValueConfig cfg = parse_kv_config(config_in);

  for (const auto& [key, value] : cfg.entries) {
    static const std::vector<std::string> known{"events_file", "exposure", "cohort",  "seasons",
                                                "lags",        "models",   "alpha0",  "min_events",
                                                "standardize", "label",    "column"};
    bool ok = false;
    for (const auto& k : known) ok |= k == key;
    if (!ok) throw data_error("grid config: unknown key '" + key + "'");
  }

  const std::string events_path =
      resolve_relative(config_path, cfg.get("events_file"));
  if (cfg.get("events_file").empty()) throw data_error("grid config: events_file is required");
  const bool standardize = cfg.get("standardize", "true") != "false";

  GridSpec spec;
  spec.alpha0 = std::stod(cfg.get("alpha0", "0.05"));
  spec.min_events = std::stoi(cfg.get("min_events", "10"));
  spec.lags = parse_lags(cfg.get("lags", "0-4"));

  spec.seasons.clear();
  for (const auto& s : split_list(cfg.get("seasons", "All,Spring,Summer,Autumn,Winter"), ','))
    spec.seasons.push_back(parse_season(s));

  spec.models.clear();
  for (const auto& m : split_list(cfg.get("models", "1,2"), ',')) {
    if (m == "1")
      spec.models.push_back(ModelKind::model1);
    else if (m == "2")
      spec.models.push_back(ModelKind::model2);
    else
      throw data_error("grid config: models must be chosen from 1,2");
  }

  // exposure = name:path[:column]
  const auto exposure_args = cfg.get_all("exposure");
  if (exposure_args.empty()) throw data_error("grid config: at least one exposure is required");
  StudyCalendar cal = infer_calendar(resolve_relative(
      config_path, split_list(exposure_args.front(), ':').at(1)));
  std::vector<std::string> exposure_paths;
  for (const auto& text : exposure_args) {
    const auto parts = split_list(text, ':');
    if (parts.size() < 2 || parts.size() > 3)
      throw data_error("grid config: exposure '" + text + "' must be name:path[:column]");
    const std::string path = resolve_relative(config_path, parts[1]);
    const std::string column = parts.size() == 3 ? parts[2] : "";
    DailySeries series = load_series_file(path, column, cal);
    if (standardize) series = iqr_standardize(series).first;
    spec.exposures.push_back({parts[0], std::move(series)});
    exposure_paths.push_back(path);
  }

  // cohort = name:attr=value[&attr=value...]   ("*" = whole cohort)
  const auto cohort_args = cfg.get_all("cohort");
  if (cohort_args.empty()) {
    spec.cohorts.push_back({"Whole", {}});
  } else {
    for (const auto& text : cohort_args) {
      const auto colon = text.find(':');
      if (colon == std::string::npos || colon == 0)
        throw data_error("grid config: cohort '" + text + "' must be name:spec");
      CohortFilter filter;
      filter.name = text.substr(0, colon);
      const std::string body = text.substr(colon + 1);
      if (body != "*") {
        for (const auto& clause : split_list(body, '&')) {
          const auto eq = clause.find('=');
          if (eq == std::string::npos)
            throw data_error("grid config: cohort clause '" + clause + "' must be attr=value");
          filter.required.emplace_back(clause.substr(0, eq), clause.substr(eq + 1));
        }
      }
      spec.cohorts.push_back(std::move(filter));
    }
  }

  const EventList events = load_events_file(events_path);
  const GridResults results = run_grid(spec, events, jobs);
  const GridSummaryReport report = summarize_grid(results);

  const std::string label = cfg.get("label", "application");
  const fs::path dir = prepare_out_dir(out);
  std::vector<std::string> written;
  for (ModelKind model : spec.models) {
    const std::string file = "Est-" + label + "-" + model_kind_label(model) + ".csv";
    CsvWriter csv((dir / file).string());
    csv.row({"cohort", "season", "n", "pollutant", "lag", "estimate", "se", "or", "ci_low",
             "ci_high", "p", "flag_05", "flag_01", "flag_bonferroni", "status"});
    for (const GridRow* row : results.rows_for(model))
      csv.row({row->cohort, season_label(row->season), std::to_string(row->n), row->pollutant,
               std::to_string(row->lag), fmt_opt(row->estimate), fmt_opt(row->se),
               fmt_opt(row->odds_ratio), fmt_opt(row->ci_low), fmt_opt(row->ci_high),
               fmt_opt(row->p), row->flag_05 ? "1" : "0", row->flag_01 ? "1" : "0",
               row->flag_bonferroni ? "1" : "0", row->status});
    written.push_back(file);
  }
  {
    CsvWriter csv((dir / "grid_summary.csv").string());
    csv.row({"model", "rows", "positive", "negative", "p05", "p01", "bonferroni",
             "alpha_bonferroni", "cross_model_correlation"});
    for (const auto& m : report.per_model)
      csv.row({model_kind_label(m.model), std::to_string(m.n_rows),
               std::to_string(m.n_positive), std::to_string(m.n_negative),
               std::to_string(m.n_p05), std::to_string(m.n_p01),
               std::to_string(m.n_bonferroni), format_double(results.alpha_bonferroni),
               fmt_opt(report.cross_model_correlation)});
  }

  RunManifest manifest;
  manifest.command = "grid";
  manifest.add_param("label", label);
  manifest.add_param("cells", std::to_string(spec.n_cells()));
  manifest.add_param("alpha_bonferroni", format_double(results.alpha_bonferroni));
  manifest.add_param("standardize", standardize ? "true" : "false");
  manifest.add_param("jobs", std::to_string(jobs));
  manifest.input_files.push_back(config_path);
  manifest.input_files.push_back(events_path);
  for (const auto& p : exposure_paths) manifest.input_files.push_back(p);
  manifest.wall_seconds = timer.seconds();
  manifest.write(dir);

  for (const auto& f : written) std::cout << "wrote " << (dir / f).string() << "\n";
  std::cout << "cells per model: " << spec.n_cells() << ", bonferroni threshold "
            << format_double(results.alpha_bonferroni) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");
  CLI::App app{"case-crossover analysis toolkit"};
  app.require_subcommand(1);

  // synth
  std::string synth_out, synth_start = "2000-04-01", synth_end = "2010-03-31";
  std::string synth_column = "value";
  double year_amp = 1.0, month_amp = 0.5, week_amp = 2.0, noise_sd = 0.25;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "generate a synthetic daily exposure series");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--start", synth_start, "first day (YYYY-MM-DD)");
  synth->add_option("--end", synth_end, "last day (YYYY-MM-DD)");
  synth->add_option("--year-amp", year_amp, "yearly sine amplitude");
  synth->add_option("--month-amp", month_amp, "monthly sine amplitude");
  synth->add_option("--week-amp", week_amp, "weekly AR(1) level amplitude");
  synth->add_option("--noise-sd", noise_sd, "daily noise standard deviation");
  synth->add_option("--column", synth_column, "name of the value column");
  synth->add_option("--seed", synth_seed, "random seed (drawn and recorded if absent)");

  // decompose
  std::string dec_input, dec_column, dec_start, dec_end, dec_out;
  bool dec_standardize = false;
  auto* dec = app.add_subcommand("decompose", "four-component trend decomposition to CSV");
  dec->add_option("--input", dec_input, "daily series CSV")->required()->check(CLI::ExistingFile);
  dec->add_option("--column", dec_column, "value column (default: the single non-date column)");
  dec->add_option("--start", dec_start, "study period start (default: inferred)");
  dec->add_option("--end", dec_end, "study period end (default: inferred)");
  dec->add_flag("--standardize", dec_standardize, "divide by the interquartile range first");
  dec->add_option("--out", dec_out, "output directory")->required();

  // referents
  std::string ref_date, ref_out;
  auto* ref = app.add_subcommand("referents", "time-stratified referent days for a hazard day");
  ref->add_option("--date", ref_date, "hazard day (YYYY-MM-DD)")->required();
  ref->add_option("--out", ref_out, "output directory (prints to stdout if absent)");

  // analyze
  std::string an_input, an_column, an_start, an_end, an_events, an_model = "2", an_columns,
              an_covariate_cols, an_out;
  int an_lag = 0;
  bool an_no_standardize = false, an_export_table = false;
  std::vector<std::string> an_covariates;
  auto* an = app.add_subcommand("analyze", "fit a model on observed events");
  an->add_option("--input", an_input, "daily series CSV")->required()->check(CLI::ExistingFile);
  an->add_option("--column", an_column, "value column");
  an->add_option("--start", an_start, "study period start (default: inferred)");
  an->add_option("--end", an_end, "study period end (default: inferred)");
  an->add_option("--events", an_events, "events CSV")->required()->check(CLI::ExistingFile);
  an->add_option("--lag", an_lag, "lag k in days (hazard day = event - k)")
      ->check(CLI::Range(0, 4));
  an->add_option("--model", an_model, "1 | 2 | 3 | custom");
  an->add_option("--columns", an_columns, "comma list of columns for --model custom");
  an->add_option("--covariates", an_covariate_cols,
                 "comma list of extra adjustment columns from the input file");
  an->add_option("--covariate", an_covariates, "name=path[:column], repeatable");
  an->add_flag("--no-standardize", an_no_standardize, "skip IQR standardization");
  an->add_flag("--export-table", an_export_table, "also write the stacked analysis table");
  an->add_option("--out", an_out, "output directory")->required();

  // calibrate
  std::string cal_input, cal_column, cal_start, cal_end, cal_events, cal_model = "1",
              cal_columns, cal_covariate_cols, cal_out;
  int cal_lag = 0, cal_B = 200;
  double cal_null_gamma = 0.0;
  bool cal_no_standardize = false, cal_dump_null = false;
  std::vector<std::string> cal_covariates;
  std::optional<std::uint64_t> cal_seed;
  auto* calib = app.add_subcommand("calibrate", "permutation calibration of the design bias");
  calib->add_option("--input", cal_input, "daily series CSV")
      ->required()
      ->check(CLI::ExistingFile);
  calib->add_option("--column", cal_column, "value column");
  calib->add_option("--start", cal_start, "study period start (default: inferred)");
  calib->add_option("--end", cal_end, "study period end (default: inferred)");
  calib->add_option("--events", cal_events, "events CSV")->required()->check(CLI::ExistingFile);
  calib->add_option("--lag", cal_lag, "lag k in days")->check(CLI::Range(0, 4));
  calib->add_option("--model", cal_model, "1 | 2 | 3 | custom");
  calib->add_option("--columns", cal_columns, "comma list of columns for --model custom");
  calib->add_option("--covariates", cal_covariate_cols,
                    "comma list of extra adjustment columns from the input file");
  calib->add_option("--covariate", cal_covariates, "name=path[:column], repeatable");
  calib->add_flag("--no-standardize", cal_no_standardize, "skip IQR standardization");
  calib->add_option("--B", cal_B, "number of null permutations")->check(CLI::Range(2, 1000000));
  calib->add_option("--null-gamma", cal_null_gamma,
                    "trend weight of the null reference generator (0 = uniform days)");
  calib->add_flag("--dump-null", cal_dump_null, "also write the null estimates");
  calib->add_option("--seed", cal_seed, "random seed (drawn and recorded if absent)");
  calib->add_option("--out", cal_out, "output directory")->required();

  // simulate
  std::string sim_config, sim_out;
  int sim_jobs = 1;
  std::optional<std::uint64_t> sim_seed;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo size/power experiment");
  sim->add_option("--config", sim_config, "scenario config file")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--jobs", sim_jobs, "worker threads")->check(CLI::Range(1, 256));
  sim->add_option("--seed", sim_seed, "master seed (overrides the config)");

  // grid
  std::string grid_config, grid_out;
  int grid_jobs = 1;
  auto* grid = app.add_subcommand("grid", "cohorts x seasons x lags x exposures study grid");
  grid->add_option("--config", grid_config, "grid config file")
      ->required()
      ->check(CLI::ExistingFile);
  grid->add_option("--out", grid_out, "output directory")->required();
  grid->add_option("--jobs", grid_jobs, "worker threads")->check(CLI::Range(1, 256));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints usage or help text
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_out, synth_start, synth_end, year_amp, month_amp, week_amp,
                       noise_sd, synth_column, synth_seed);
    if (dec->parsed())
      return cmd_decompose(dec_input, dec_column, dec_start, dec_end, dec_standardize, dec_out);
    if (ref->parsed()) return cmd_referents(ref_date, ref_out);
    if (an->parsed())
      return cmd_analyze(an_input, an_column, an_start, an_end, an_events, an_lag, an_model,
                         an_columns, an_covariates, an_covariate_cols, !an_no_standardize,
                         an_export_table, an_out);
    if (calib->parsed())
      return cmd_calibrate(cal_input, cal_column, cal_start, cal_end, cal_events, cal_lag,
                           cal_model, cal_columns, cal_covariates, cal_covariate_cols,
                           !cal_no_standardize, cal_B, cal_null_gamma, cal_dump_null, cal_seed,
                           cal_out);
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out, sim_jobs, sim_seed);
    if (grid->parsed()) return cmd_grid(grid_config, grid_out, grid_jobs);
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
