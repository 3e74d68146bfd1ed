#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "casecross/date.hpp"
#include "casecross/errors.hpp"
#include "casecross/rng.hpp"
#include "casecross/series.hpp"

namespace casecross {

// Cumulative sampling weights over the observed days of a decomposed series:
// P(day) proportional to exp(beta * daily + gamma * (yearly + monthly + weekly)).
// Exponents are stabilized by subtracting their maximum; raw exponents beyond
// +-700 are rejected before that.
class EventDaySampler {
 public:
  EventDaySampler(const TrendDecomposition& decomp, double beta, double gamma) {
    const int n = decomp.n_days();
    std::vector<double> exponent;
    exponent.reserve(static_cast<size_t>(n));
    days_.reserve(static_cast<size_t>(n));
    double max_exp = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!decomp.has_daily(i)) continue;
      const auto idx = static_cast<size_t>(i);
      const double e = beta * decomp.daily[idx] +
                       gamma * (decomp.yearly[idx] + decomp.monthly[idx] + decomp.weekly[idx]);
      if (std::abs(e) > 700.0)
        throw numeric_error("weight overflow: sampling exponent " + std::to_string(e) +
                            " on day " + decomp.calendar.date_at(i).to_string() +
                            "; rescale the series or shrink the coefficients");
      exponent.push_back(e);
      days_.push_back(i);
      max_exp = std::max(max_exp, e);
    }
    if (days_.empty()) throw data_error("cannot sample events: series has no observed days");
    cumulative_.resize(exponent.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < exponent.size(); ++i) {
      acc += std::exp(exponent[i] - max_exp);
      cumulative_[i] = acc;
    }
    total_ = acc;
  }

  int draw_day_index(Rng& rng) const {
    const double u = rng.uniform01() * total_;
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t k = it == cumulative_.end() ? cumulative_.size() - 1
                                                  : static_cast<size_t>(it - cumulative_.begin());
    return days_[k];
  }

 private:
  std::vector<int> days_;
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

// Draws n_events days with replacement, weighted as above.
inline std::vector<Date> sample_event_days(const TrendDecomposition& decomp, double beta,
                                           double gamma, int n_events, Rng& rng) {
  if (n_events < 1) throw std::invalid_argument("sample_event_days: n_events must be >= 1");
  const EventDaySampler sampler(decomp, beta, gamma);
  std::vector<Date> out;
  out.reserve(static_cast<size_t>(n_events));
  for (int i = 0; i < n_events; ++i)
    out.push_back(decomp.calendar.date_at(sampler.draw_day_index(rng)));
  return out;
}

}  // namespace casecross
