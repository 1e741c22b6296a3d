#pragma once

#include <functional>
#include <vector>

#include "cslim/types.hpp"

namespace cslim {

// Centered circular moving average over an odd window of phases.
PeriodicMatrixSeries moving_average(const PeriodicMatrixSeries& series, int window);

// Sharp spectral truncation: keeps Fourier modes with min(f, P-f) <= cutoff.
PeriodicMatrixSeries lowpass(const PeriodicMatrixSeries& series, int cutoff_modes);

// Circular Gaussian kernel smoothing with standard deviation sigma, in phase
// samples.
PeriodicMatrixSeries gaussian_smooth(const PeriodicMatrixSeries& series, double sigma);

// Least-squares fit of y(t) ~ c0 + c1 sin(2 pi t) + c2 cos(2 pi t), reported
// in the modulation form mean * (1 + intensity * pi * sin(2 pi (t + phase))).
// phase is canonical in [-0.5, 0.5); a positive phase means the curve leads
// the reference sinusoid.  degenerate_mean marks |c0| too small to normalize.
struct FitResult {
  double mean = 0.0;
  double intensity = 0.0;
  double phase = 0.0;
  double residual = 0.0;
  bool degenerate_mean = false;
};

FitResult sine_fit(const std::vector<double>& values, const std::vector<double>& times);

using MatrixFn = std::function<Matrix(double)>;

// Frobenius relative error of a constant estimate against a constant truth.
double relative_error_const(const Matrix& model, const Matrix& truth);

// L2-in-phase relative error of a periodic curve against an evaluable truth,
// computed at the model's own time coordinates with flagged phases excluded:
// sqrt(sum_j |model_j - truth(t_j)|_F^2) / sqrt(sum_j |truth(t_j)|_F^2).
double relative_error_series(const SeriesView& model, const MatrixFn& truth);

// Relative difference between two periodic curves on the coarser of the two
// grids, interpolating the finer one circularly; b plays the reference role in
// the denominator.
double relative_difference(const SeriesView& a, const SeriesView& b);

// Averages blocks of phases down to `intervals` values labelled at block
// centers (j + 0.5) / intervals.
PeriodicMatrixSeries interval_average(const PeriodicMatrixSeries& series, int intervals);

// Same reduction for a fitted model: a block averages its unflagged phases
// and is flagged only when every member is.
PeriodicModel interval_average(const PeriodicModel& model, int intervals);

// Scalar component (i, j) of a matrix curve, for fitting and plotting.
std::vector<double> component(const SeriesView& series, Eigen::Index row,
                              Eigen::Index col);

// Linear-interpolation quantile (type 7) of an unordered, nonempty sample;
// p in [0, 1].
double quantile(std::vector<double> values, double p);

}  // namespace cslim
