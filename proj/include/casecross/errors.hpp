#pragma once

#include <stdexcept>
#include <string>

namespace casecross {

// Problems in input data: malformed files, duplicate or out-of-range dates,
// empty event lists, strata that cannot be assembled.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failures of numeric procedures: degenerate scales, rank-deficient designs,
// separation, weight overflow, unstable Monte-Carlo loops.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct collinearity_error : numeric_error {
  using numeric_error::numeric_error;
};

struct separation_error : numeric_error {
  using numeric_error::numeric_error;
};

}  // namespace casecross
