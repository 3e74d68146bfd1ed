#pragma once

// Case-crossover analysis toolkit: calendar-nested trend decomposition of
// daily exposure series, time-stratified referent selection, unconditional
// logistic regression, permutation calibration of the design bias, a
// Monte-Carlo size/power harness and the multi-way empirical-study grid.

#include "casecross/calendar.hpp"
#include "casecross/calibrate.hpp"
#include "casecross/config.hpp"
#include "casecross/csv.hpp"
#include "casecross/date.hpp"
#include "casecross/design.hpp"
#include "casecross/errors.hpp"
#include "casecross/glm.hpp"
#include "casecross/grid.hpp"
#include "casecross/manifest.hpp"
#include "casecross/math.hpp"
#include "casecross/rng.hpp"
#include "casecross/sampling.hpp"
#include "casecross/series.hpp"
#include "casecross/simulate.hpp"
#include "casecross/threads.hpp"
#include "casecross/version.hpp"
