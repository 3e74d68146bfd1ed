#include <doctest.h>

#include <cmath>

#include "casecross/calibrate.hpp"
#include "casecross/simulate.hpp"

using namespace casecross;

namespace {

FitResult fit_with_target(double beta_hat) {
  FitResult fit;
  fit.names = {"(intercept)", "exposure"};
  fit.coef = {0.0, beta_hat};
  fit.se = {1.0, 0.1};
  fit.target = "exposure";
  return fit;
}

}  // namespace

TEST_CASE("calibrate: direct arithmetic") {
  const auto result = calibrate(fit_with_target(0.5), {0.1, 0.2, 0.3});
  CHECK(result.b_hat == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(result.beta_obs == 0.5);
  CHECK(result.beta_cal == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(result.null_estimates.size() == 3);
  // no null estimate deviates from b_hat by 0.3 or more
  CHECK(result.p_perm == doctest::Approx(1.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("calibrate: symmetric nulls leave the estimate unchanged") {
  const auto result = calibrate(fit_with_target(0.42), {-0.2, -0.1, 0.1, 0.2});
  CHECK(result.b_hat == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(result.beta_cal == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("calibrate: shift equivariance and p bounds") {
  const std::vector<double> nulls{0.05, -0.03, 0.11, 0.02, -0.08, 0.04};
  const auto base = calibrate(fit_with_target(0.3), nulls);
  std::vector<double> shifted = nulls;
  for (double& e : shifted) e += 1.7;
  const auto moved = calibrate(fit_with_target(0.3 + 1.7), shifted);
  CHECK(moved.beta_cal == doctest::Approx(base.beta_cal).epsilon(1e-12));
  CHECK(moved.p_perm == doctest::Approx(base.p_perm).epsilon(1e-12));
  CHECK(moved.perm_sd == doctest::Approx(base.perm_sd).epsilon(1e-10));

  CHECK(base.p_perm > 0.0);
  CHECK(base.p_perm <= 1.0);

  // beta_obs equal to b_hat gives p_perm = 1
  const double b = base.b_hat;
  const auto degenerate = calibrate(fit_with_target(b), nulls);
  CHECK(degenerate.p_perm == 1.0);
}

TEST_CASE("calibrate requires a reference distribution") {
  CHECK_THROWS_AS(calibrate(fit_with_target(0.5), {}), numeric_error);
  CHECK_THROWS_AS(calibrate(fit_with_target(0.5), {0.1}), numeric_error);
}

TEST_CASE("permute_null_fits: deterministic, seed-sensitive, B-checked") {
  const StudyCalendar cal(Date(2001, 4, 1), Date(2003, 3, 31));
  Rng rng(2024);
  const DailySeries raw = generate_synthetic_series(0.8, 0.4, 1.2, 0.3, cal, rng);
  const auto [series, iqr] = iqr_standardize(raw);
  const TrendDecomposition decomp = decompose(series);

  CHECK_THROWS_AS(permute_null_fits(100, series, decomp, ModelSpec::model2(), 1, 7),
                  std::invalid_argument);
  CHECK_THROWS_AS(permute_null_fits(0, series, decomp, ModelSpec::model2(), 10, 7),
                  std::invalid_argument);

  const auto a = permute_null_fits(150, series, decomp, ModelSpec::model2(), 12, 99);
  const auto b = permute_null_fits(150, series, decomp, ModelSpec::model2(), 12, 99);
  const auto c = permute_null_fits(150, series, decomp, ModelSpec::model2(), 12, 100);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.size() == 12);
}

TEST_CASE("permute_null_fits: model-2 null estimates center near zero") {
  const StudyCalendar cal(Date(2000, 4, 1), Date(2005, 3, 31));
  Rng rng(31337);
  const DailySeries raw = generate_synthetic_series(1.0, 0.5, 2.0, 0.3, cal, rng);
  const auto [series, iqr] = iqr_standardize(raw);
  const TrendDecomposition decomp = decompose(series);

  const int B = 80;
  const auto nulls = permute_null_fits(400, series, decomp, ModelSpec::model2(), B, 5);
  REQUIRE(nulls.size() == static_cast<size_t>(B));
  const double m = mean(nulls);
  const double sd = sample_sd(nulls);
  CHECK(std::abs(m) < 3.0 * sd / std::sqrt(static_cast<double>(B)));
}
