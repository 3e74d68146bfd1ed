#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "casecross/design.hpp"
#include "casecross/errors.hpp"
#include "casecross/glm.hpp"
#include "casecross/math.hpp"
#include "casecross/rng.hpp"
#include "casecross/sampling.hpp"

namespace casecross {

// Permutation estimate of the design bias b and the calibrated effect.
struct CalibrationResult {
  double b_hat = 0.0;     // mean of the null estimates
  double beta_obs = 0.0;  // observed effect estimate
  double beta_cal = 0.0;  // beta_obs - b_hat
  double perm_sd = 0.0;   // sample SD of the null estimates
  double p_perm = 1.0;    // two-sided, add-one smoothed
  std::vector<double> null_estimates;
};

namespace detail {

// Shared core: B independent zero-effect replicates of the full design
// pipeline (sample event days, select referents, fit), each on its own
// stream derived from (seed, iteration). `null_gamma` sets the trend
// weighting of the null reference generator; 0 draws days uniformly.
inline std::vector<double> permute_null_fits_with(const TableBuilder& builder,
                                                  const TrendDecomposition& decomp, int n_events,
                                                  const ModelSpec& spec, int B,
                                                  std::uint64_t seed, int lag,
                                                  double null_gamma) {
  if (B < 2) throw std::invalid_argument("permute_null_fits: B must be >= 2");
  if (n_events < 1) throw std::invalid_argument("permute_null_fits: n_events must be >= 1");
  const EventDaySampler sampler(decomp, 0.0, null_gamma);
  const std::string target = spec.target();
  std::vector<double> estimates;
  estimates.reserve(static_cast<size_t>(B));
  int failed = 0;
  EventList events;
  events.lag = lag;
  for (int b = 0; b < B; ++b) {
    Rng rng = derive_rng(seed, {static_cast<std::uint64_t>(b)});
    events.events.clear();
    events.events.reserve(static_cast<size_t>(n_events));
    for (int i = 0; i < n_events; ++i) {
      const int day = sampler.draw_day_index(rng);
      events.events.push_back(Event{builder.calendar().date_at(day), {}});
    }
    try {
      const FitResult fit = fit_logistic(builder.build(events), spec);
      estimates.push_back(fit.coef_of(target));
    } catch (const data_error&) {
      ++failed;
    } catch (const numeric_error&) {
      ++failed;
    }
  }
  if (failed * 10 > B)
    throw numeric_error("calibration unstable: " + std::to_string(failed) + " of " +
                        std::to_string(B) + " null fits failed");
  return estimates;
}

}  // namespace detail

// Fits the model on B synthetic null event sets and returns the exposure
// coefficients. Fully determined by (seed, inputs); failed iterations are
// skipped, more than 10% of them is an error.
inline std::vector<double> permute_null_fits(
    int n_events, const DailySeries& series, const TrendDecomposition& decomp,
    const ModelSpec& spec, int B, std::uint64_t seed, int lag = 0, double null_gamma = 0.0,
    std::vector<std::pair<std::string, const DailySeries*>> covariates = {}) {
  const TableBuilder builder(series, decomp, std::move(covariates));
  return detail::permute_null_fits_with(builder, decomp, n_events, spec, B, seed, lag,
                                        null_gamma);
}

// Combines an observed fit with its null reference distribution:
// b_hat = mean of nulls, beta_cal = beta_obs - b_hat, and a two-sided
// permutation p-value with add-one smoothing.
inline CalibrationResult calibrate(const FitResult& observed_fit,
                                   std::vector<double> null_estimates) {
  if (null_estimates.size() < 2)
    throw numeric_error("no reference distribution: need at least 2 null estimates, have " +
                        std::to_string(null_estimates.size()));
  CalibrationResult result;
  result.beta_obs = observed_fit.coef_of(observed_fit.target);
  result.b_hat = mean(null_estimates);
  result.beta_cal = result.beta_obs - result.b_hat;
  result.perm_sd = sample_sd(null_estimates);
  const double observed_dev = std::abs(result.beta_cal);
  std::size_t at_least_as_extreme = 0;
  for (double e : null_estimates)
    if (std::abs(e - result.b_hat) >= observed_dev) ++at_least_as_extreme;
  result.p_perm = static_cast<double>(1 + at_least_as_extreme) /
                  static_cast<double>(null_estimates.size() + 1);
  result.null_estimates = std::move(null_estimates);
  return result;
}

}  // namespace casecross
