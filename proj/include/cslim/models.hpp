#pragma once

#include <vector>

#include "cslim/estimate.hpp"
#include "cslim/types.hpp"

namespace cslim {

// Dynamics from a correlation pair: A = log(k_s k_0^{-1}) / s.  Throws
// SingularCovariance when k_0 is ill-conditioned (cond > 1e12) and propagates
// branch-cut and singularity errors from the logarithm.
Matrix green_function(const Matrix& k_0, const Matrix& k_s, double s);

// Stationary fluctuation-dissipation closure: Q = -(A C + C A^T) / 2.
Matrix classical_fdr_diffusion(const Matrix& dynamics, const Matrix& covariance);

struct LimEstimate {
  Matrix dynamics;
  Matrix diffusion;
  Matrix covariance;
};

// Classical stationary inverse model at lag lag_steps * dt.
LimEstimate classical_lim(const TimeSeries& series, long lag_steps);

enum class CsVariant { original, e };

// Periodic fluctuation-dissipation closure applied phase by phase:
// Q(t) = (dC/dt - A C - C A^T) / 2.  The three series must share one grid.
PeriodicMatrixSeries periodic_fdr_diffusion(const PeriodicMatrixSeries& dynamics,
                                            const PeriodicMatrixSeries& covariance,
                                            const PeriodicMatrixSeries& covariance_rate);

// Core of the subdivided cyclostationary fit, taking per-interval correlation
// statistics directly.  k0[j] and ks[j] are the zero-lag and lag-k*dt pooled
// correlations of interval j; dt is the sampling step.  Exposed so exact
// correlation inputs can bypass the path-statistics stage.
PeriodicModel cs_lim_from_interval_stats(const std::vector<Matrix>& k0,
                                         const std::vector<Matrix>& ks,
                                         int period, int intervals, int lag_steps,
                                         double dt, CsVariant variant);

// Subdivided cyclostationary inverse model.  The period is split into
// `intervals` equal blocks of phases; pairs at lag lag_steps are pooled per
// block.  The original variant centre-labels each block and uses a central
// covariance derivative; the e variant differences forward and shifts labels
// by (lag_steps-1)*dt/2, the mean phase of the pooled pair midpoints.
PeriodicModel cs_lim(const TimeSeries& series, int period, int intervals,
                     int lag_steps, CsVariant variant);

// Per-phase linear fit from a correlation field holding lags 0 and 1:
// A(t) = (K(dt, t) - C(t)) / dt * C(t)^{-1}, labelled at t + dt/2.
PeriodicModel l_cs_lim_from_field(const CorrelationField& field, double dt);

// Local-in-phase cyclostationary inverse model at every phase of the period.
PeriodicModel l_cs_lim(const TimeSeries& series, int period);

}  // namespace cslim
