#pragma once

#include "cslim/types.hpp"

namespace cslim {

// Lag correlation K(s) = sum_m x(m+s) x(m)^T / (pairs) over the whole record,
// treating it as stationary.  lag_steps may be 0; it must leave at least one
// pair.
Matrix stationary_correlation(const TimeSeries& series, long lag_steps);

// Cyclostationary cell K(s, t): pairs are taken at base indices congruent to
// phase_index modulo period, one per complete period; pairs whose lead index
// falls off the record are dropped and the cell is renormalized by the count
// actually summed.
Matrix cyclo_correlation(const TimeSeries& series, int period, long lag_steps,
                         int phase_index);

// Tabulates K(s, t) for all phases and lags 0..max_lag in one pass.
CorrelationField correlation_field(const TimeSeries& series, int period,
                                   int max_lag);

// Per-phase covariance C(t) = sym(K(0, t)) on the phase grid j/period.
PeriodicMatrixSeries covariance_series(const TimeSeries& series, int period);

enum class DiffScheme { forward, central };

// Periodic finite difference on the series' own uniform grid: forward needs 2
// phases, central 3.  Neighbor indices wrap around the period.
PeriodicMatrixSeries periodic_diff(const PeriodicMatrixSeries& series,
                                   DiffScheme scheme);

}  // namespace cslim
