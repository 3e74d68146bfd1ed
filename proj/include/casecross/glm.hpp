#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "casecross/design.hpp"
#include "casecross/errors.hpp"
#include "casecross/math.hpp"

namespace casecross {

enum class ModelKind { model1, model2, model3, custom };

inline const char* model_kind_label(ModelKind k) {
  switch (k) {
    case ModelKind::model1: return "model1";
    case ModelKind::model2: return "model2";
    case ModelKind::model3: return "model3";
    case ModelKind::custom: return "custom";
  }
  return "?";
}

// Which table columns enter the regression (an intercept is always added):
//   model1: exposure
//   model2: exposure + yearly + monthly + weekly
//   model3: daily + yearly + monthly + weekly
//   custom: any declared column subset
// `covariates` appends extra adjustment columns to any of the above.
struct ModelSpec {
  ModelKind kind = ModelKind::model1;
  std::vector<std::string> covariates;
  std::vector<std::string> custom_columns;

  static ModelSpec model1(std::vector<std::string> covs = {}) {
    return {ModelKind::model1, std::move(covs), {}};
  }
  static ModelSpec model2(std::vector<std::string> covs = {}) {
    return {ModelKind::model2, std::move(covs), {}};
  }
  static ModelSpec model3(std::vector<std::string> covs = {}) {
    return {ModelKind::model3, std::move(covs), {}};
  }
  static ModelSpec custom(std::vector<std::string> columns, std::vector<std::string> covs = {}) {
    return {ModelKind::custom, std::move(covs), std::move(columns)};
  }

  std::vector<std::string> columns() const {
    std::vector<std::string> cols;
    switch (kind) {
      case ModelKind::model1: cols = {"exposure"}; break;
      case ModelKind::model2: cols = {"exposure", "yearly", "monthly", "weekly"}; break;
      case ModelKind::model3: cols = {"daily", "yearly", "monthly", "weekly"}; break;
      case ModelKind::custom: cols = custom_columns; break;
    }
    cols.insert(cols.end(), covariates.begin(), covariates.end());
    return cols;
  }

  // The coefficient carrying the exposure effect.
  std::string target() const {
    switch (kind) {
      case ModelKind::model1:
      case ModelKind::model2: return "exposure";
      case ModelKind::model3: return "daily";
      case ModelKind::custom:
        if (custom_columns.empty()) throw data_error("custom model declares no columns");
        return custom_columns.front();
    }
    throw data_error("invalid model kind");
  }

  std::string name() const { return model_kind_label(kind); }
};

struct FitResult {
  std::vector<std::string> names;  // "(intercept)" first
  std::vector<double> coef, se, z, p, odds_ratio, ci_low, ci_high;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  std::string model;
  std::string target;
  std::size_t n_rows = 0;

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }
  double coef_of(const std::string& name) const { return at(coef, name); }
  double se_of(const std::string& name) const { return at(se, name); }
  double p_of(const std::string& name) const { return at(p, name); }

 private:
  double at(const std::vector<double>& v, const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) throw data_error("unknown coefficient: '" + name + "'");
    return v[static_cast<size_t>(i)];
  }
};

namespace detail {

inline double log1pexp(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// In-place Cholesky of a p x p symmetric positive definite matrix
// (row-major, lower triangle). Returns false on a non-positive pivot.
inline bool cholesky(std::vector<double>& a, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > 0.0)) return false;
    const double root = std::sqrt(d);
    a[j * p + j] = root;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = s / root;
    }
  }
  return true;
}

inline void cholesky_solve(const std::vector<double>& l, std::size_t p, std::vector<double>& x) {
  for (std::size_t i = 0; i < p; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * p + k] * x[k];
    x[i] = s / l[i * p + i];
  }
  for (std::size_t ii = p; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < p; ++k) s -= l[k * p + ii] * x[k];
    x[ii] = s / l[ii * p + ii];
  }
}

// Inverse from the Cholesky factor; fills a full symmetric matrix.
inline std::vector<double> cholesky_inverse(const std::vector<double>& l, std::size_t p) {
  std::vector<double> inv(p * p, 0.0);
  std::vector<double> e(p);
  for (std::size_t j = 0; j < p; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    cholesky_solve(l, p, e);
    for (std::size_t i = 0; i < p; ++i) inv[i * p + j] = e[i];
  }
  return inv;
}

struct DesignMatrix {
  std::size_t n = 0, p = 0;
  std::vector<double> x;  // column-major, column 0 = intercept
  std::vector<std::string> names;
};

inline DesignMatrix assemble_design(const CaseCrossoverTable& table, const ModelSpec& spec) {
  if (table.n_rows() == 0) throw data_error("cannot fit: empty table");
  DesignMatrix d;
  d.n = table.n_rows();
  const auto cols = spec.columns();
  if (cols.empty()) throw data_error("cannot fit: model declares no columns");
  d.p = cols.size() + 1;
  d.names.reserve(d.p);
  d.names.push_back("(intercept)");
  d.x.assign(d.n * d.p, 1.0);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    d.names.push_back(cols[c]);
    const auto col = table.column(cols[c]);
    std::copy(col.begin(), col.end(), d.x.begin() + static_cast<std::ptrdiff_t>((c + 1) * d.n));
  }
  for (double v : d.x)
    if (!std::isfinite(v)) throw data_error("cannot fit: design matrix has non-finite values");
  return d;
}

// Rank check on the Gram matrix via pivoted-free elimination; columns whose
// pivot collapses are linearly dependent on earlier ones.
inline void check_full_rank(const DesignMatrix& d) {
  const std::size_t p = d.p;
  std::vector<double> g(p * p, 0.0);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      CompensatedSum s;
      for (std::size_t i = 0; i < d.n; ++i) s.add(d.x[a * d.n + i] * d.x[b * d.n + i]);
      g[a * p + b] = g[b * p + a] = s.value();
    }
  std::vector<std::string> dependent;
  std::vector<double> l(p * p, 0.0);
  constexpr double rel_tol = 1e-8;
  for (std::size_t j = 0; j < p; ++j) {
    double pivot = g[j * p + j];
    for (std::size_t k = 0; k < j; ++k) pivot -= l[j * p + k] * l[j * p + k];
    if (pivot <= rel_tol * g[j * p + j] || g[j * p + j] == 0.0) {
      dependent.push_back(d.names[j]);
      continue;  // leave the row zero: the column is spanned by earlier ones
    }
    l[j * p + j] = std::sqrt(pivot);
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = g[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * p + k] * l[j * p + k];
      l[i * p + j] = s / l[j * p + j];
    }
  }
  if (!dependent.empty()) {
    std::string msg = "collinear design: column(s)";
    for (const auto& name : dependent) msg += " '" + name + "'";
    msg += " linearly dependent on earlier columns";
    throw collinearity_error(msg);
  }
}

}  // namespace detail

// Log-likelihood of an unconditional logistic model at given coefficients
// (intercept first, then the model's columns).
inline double logistic_loglik(const CaseCrossoverTable& table, const ModelSpec& spec,
                              std::span<const double> coef) {
  const auto d = detail::assemble_design(table, spec);
  if (coef.size() != d.p) throw data_error("coefficient vector has wrong length");
  CompensatedSum ll;
  for (std::size_t i = 0; i < d.n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < d.p; ++j) eta += coef[j] * d.x[j * d.n + i];
    ll.add(table.y[i] * eta - detail::log1pexp(eta));
  }
  return ll.value();
}

// Score (gradient of the log-likelihood) at given coefficients.
inline std::vector<double> logistic_score(const CaseCrossoverTable& table, const ModelSpec& spec,
                                          std::span<const double> coef) {
  const auto d = detail::assemble_design(table, spec);
  if (coef.size() != d.p) throw data_error("coefficient vector has wrong length");
  std::vector<CompensatedSum> g(d.p);
  for (std::size_t i = 0; i < d.n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < d.p; ++j) eta += coef[j] * d.x[j * d.n + i];
    const double mu = 1.0 / (1.0 + std::exp(-eta));
    const double r = table.y[i] - mu;
    for (std::size_t j = 0; j < d.p; ++j) g[j].add(r * d.x[j * d.n + i]);
  }
  std::vector<double> out(d.p);
  for (std::size_t j = 0; j < d.p; ++j) out[j] = g[j].value();
  return out;
}

// Maximum-likelihood fit by Newton steps with step-halving, capped at 50
// iterations. Converged means the score max-norm fell below 1e-8. Standard
// errors come from the inverse observed information.
inline FitResult fit_logistic(const CaseCrossoverTable& table, const ModelSpec& spec) {
  const auto d = detail::assemble_design(table, spec);
  detail::check_full_rank(d);

  const std::size_t n = d.n, p = d.p;
  double n1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) n1 += table.y[i];
  const double n0 = static_cast<double>(n) - n1;
  if (n1 == 0.0 || n0 == 0.0)
    throw data_error("cannot fit: response takes a single value across all rows");

  std::vector<double> beta(p, 0.0);
  beta[0] = std::log(n1 / n0);

  std::vector<double> eta(n), mu(n), w(n);
  auto eval = [&](const std::vector<double>& b) {
    CompensatedSum ll;
    for (std::size_t i = 0; i < n; ++i) {
      double e = 0.0;
      for (std::size_t j = 0; j < p; ++j) e += b[j] * d.x[j * n + i];
      eta[i] = e;
      ll.add(table.y[i] * e - detail::log1pexp(e));
    }
    return ll.value();
  };

  double ll = eval(beta);
  std::vector<double> grad(p), hess(p * p), delta(p), candidate(p);
  constexpr double score_tol = 1e-8;
  constexpr double ll_rel_tol = 1e-10;
  constexpr double separation_bound = 15.0;
  constexpr int max_iter = 50;

  int iter = 0;
  double score_norm = std::numeric_limits<double>::infinity();
  while (iter < max_iter) {
    // score and observed information at the current point
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double r = table.y[i] - mu[i];
      for (std::size_t j = 0; j < p; ++j) grad[j] += r * d.x[j * n + i];
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w[i] * d.x[a * n + i] * d.x[b * n + i];
        hess[a * p + b] = hess[b * p + a] = s;
      }

    score_norm = 0.0;
    for (double g : grad) score_norm = std::max(score_norm, std::abs(g));
    if (score_norm < score_tol) break;

    ++iter;
    std::vector<double> l = hess;
    if (!detail::cholesky(l, p)) break;  // information singular: probabilities pinned at 0/1
    delta = grad;
    detail::cholesky_solve(l, p, delta);

    // step-halving keeps the log-likelihood non-decreasing
    double step = 1.0;
    bool accepted = false;
    double ll_new = ll;
    for (int h = 0; h < 30; ++h, step *= 0.5) {
      for (std::size_t j = 0; j < p; ++j) candidate[j] = beta[j] + step * delta[j];
      ll_new = eval(candidate);
      if (ll_new >= ll - 1e-12 * (std::abs(ll) + 1.0)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      eval(beta);  // restore eta
      break;
    }
    const bool improving = ll_new > ll + ll_rel_tol * (std::abs(ll) + 1.0);
    beta = candidate;
    for (std::size_t j = 0; j < p; ++j)
      if (std::abs(beta[j]) > separation_bound && improving)
        throw separation_error("separation detected: coefficient '" + d.names[j] +
                               "' exceeded " + format_double(separation_bound) +
                               " with the likelihood still improving");
    // likelihood changes vanish one step before the score collapses, so the
    // score criterion at the top of the loop decides termination
    ll = ll_new;
  }

  // final information for standard errors
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
    w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
  }
  std::fill(hess.begin(), hess.end(), 0.0);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += w[i] * d.x[a * n + i] * d.x[b * n + i];
      hess[a * p + b] = hess[b * p + a] = s;
    }
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = table.y[i] - mu[i];
    for (std::size_t j = 0; j < p; ++j) grad[j] += r * d.x[j * n + i];
  }
  score_norm = 0.0;
  for (double g : grad) score_norm = std::max(score_norm, std::abs(g));

  FitResult fit;
  fit.names = d.names;
  fit.coef = beta;
  fit.loglik = ll;
  fit.iterations = iter;
  fit.converged = score_norm < score_tol;
  fit.model = spec.name();
  fit.target = spec.target();
  fit.n_rows = n;

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  fit.se.assign(p, nan);
  std::vector<double> l = hess;
  if (detail::cholesky(l, p)) {
    const auto inv = detail::cholesky_inverse(l, p);
    for (std::size_t j = 0; j < p; ++j) fit.se[j] = std::sqrt(inv[j * p + j]);
  }
  fit.z.resize(p);
  fit.p.resize(p);
  fit.odds_ratio.resize(p);
  fit.ci_low.resize(p);
  fit.ci_high.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    fit.z[j] = fit.coef[j] / fit.se[j];
    fit.p[j] = normal_p_two_sided(fit.z[j]);
    fit.odds_ratio[j] = std::exp(fit.coef[j]);
    fit.ci_low[j] = std::exp(fit.coef[j] - kZ95 * fit.se[j]);
    fit.ci_high[j] = std::exp(fit.coef[j] + kZ95 * fit.se[j]);
  }
  return fit;
}

struct WaldSummary {
  double z, p, odds_ratio, ci_low, ci_high;
};

// Wald test and interval for one named coefficient.
inline WaldSummary wald_inference(const FitResult& fit, const std::string& coefficient) {
  const int idx = fit.index_of(coefficient);
  if (idx < 0) throw data_error("unknown coefficient: '" + coefficient + "'");
  const auto j = static_cast<size_t>(idx);
  const double se = fit.se[j];
  if (!std::isfinite(se) || se <= 0.0)
    throw numeric_error("degenerate inference: coefficient '" + coefficient +
                        "' has no positive finite standard error");
  const double z = fit.coef[j] / se;
  return {z, normal_p_two_sided(z), std::exp(fit.coef[j]), std::exp(fit.coef[j] - kZ95 * se),
          std::exp(fit.coef[j] + kZ95 * se)};
}

}  // namespace casecross
