#include "cslim/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace cslim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_uniform_full_period(const PeriodicMatrixSeries& series, const char* op) {
  series.validate();
  const int p = series.phases();
  const double h = 1.0 / p;
  for (int j = 0; j < p; ++j) {
    const double next = j + 1 < p ? series.times[j + 1] : series.times[0] + 1.0;
    if (std::abs(next - series.times[j] - h) > 1e-9) {
      throw GridMismatch(std::string(op) + ": phase grid is not uniform over the period");
    }
  }
}

}  // namespace

PeriodicMatrixSeries moving_average(const PeriodicMatrixSeries& series, int window) {
  require_uniform_full_period(series, "moving_average");
  const int p = series.phases();
  if (window < 1 || window % 2 == 0 || window > p) {
    std::ostringstream os;
    os << "moving_average: window " << window << " must be odd and within " << p
       << " phases";
    throw BadWindow(os.str());
  }
  const int half = window / 2;
  PeriodicMatrixSeries out;
  out.times = series.times;
  out.values.resize(p);
  for (int j = 0; j < p; ++j) {
    Matrix acc = Matrix::Zero(series.values[j].rows(), series.values[j].cols());
    for (int d = -half; d <= half; ++d) {
      acc += series.values[(j + d + p) % p];
    }
    out.values[j] = acc / static_cast<double>(window);
  }
  return out;
}

PeriodicMatrixSeries lowpass(const PeriodicMatrixSeries& series, int cutoff_modes) {
  require_uniform_full_period(series, "lowpass");
  if (cutoff_modes < 0) {
    throw BadCutoff("lowpass: cutoff must be nonnegative");
  }
  const int p = series.phases();
  const Eigen::Index rows = series.values.front().rows();
  const Eigen::Index cols = series.values.front().cols();

  PeriodicMatrixSeries out;
  out.times = series.times;
  out.values.assign(p, Matrix::Zero(rows, cols));

  // Sharp truncation of the discrete Fourier series, entry by entry; mode f
  // and its mirror p-f are kept or dropped together, so the result is real.
  std::vector<std::complex<double>> spectrum(p);
  std::vector<double> signal(p);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (int j = 0; j < p; ++j) signal[j] = series.values[j](r, c);
      for (int f = 0; f < p; ++f) {
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < p; ++j) {
          const double ang = -kTwoPi * f * j / p;
          acc += signal[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        const int wave = std::min(f, p - f);
        spectrum[f] = wave <= cutoff_modes ? acc : std::complex<double>(0.0, 0.0);
      }
      for (int j = 0; j < p; ++j) {
        std::complex<double> acc(0.0, 0.0);
        for (int f = 0; f < p; ++f) {
          const double ang = kTwoPi * f * j / p;
          acc += spectrum[f] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out.values[j](r, c) = acc.real() / p;
      }
    }
  }
  return out;
}

PeriodicMatrixSeries gaussian_smooth(const PeriodicMatrixSeries& series, double sigma) {
  require_uniform_full_period(series, "gaussian_smooth");
  if (!(sigma > 0.0)) {
    throw BadWindow("gaussian_smooth: sigma must be positive");
  }
  const int p = series.phases();
  // Circular kernel over the shortest phase distance, normalized to unit mass.
  std::vector<double> kernel(p);
  double mass = 0.0;
  for (int d = 0; d < p; ++d) {
    const double dist = std::min(d, p - d);
    kernel[d] = std::exp(-dist * dist / (2.0 * sigma * sigma));
    mass += kernel[d];
  }
  for (double& k : kernel) k /= mass;

  PeriodicMatrixSeries out;
  out.times = series.times;
  out.values.resize(p);
  for (int j = 0; j < p; ++j) {
    Matrix acc = Matrix::Zero(series.values[j].rows(), series.values[j].cols());
    for (int d = 0; d < p; ++d) {
      acc += kernel[d] * series.values[(j + d) % p];
    }
    out.values[j] = acc;
  }
  return out;
}

FitResult sine_fit(const std::vector<double>& values, const std::vector<double>& times) {
  if (values.size() != times.size()) {
    throw Error("sine_fit: values/times length mismatch");
  }
  if (values.size() < 3) {
    throw Error("sine_fit: need at least three points");
  }
  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(times[i])) {
      throw Error("sine_fit: non-finite input");
    }
    design(i, 0) = 1.0;
    design(i, 1) = std::sin(kTwoPi * times[i]);
    design(i, 2) = std::cos(kTwoPi * times[i]);
    y[i] = values[i];
  }
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(y);
  const double c0 = coef[0], c1 = coef[1], c2 = coef[2];

  FitResult fit;
  fit.mean = c0;
  fit.residual = (y - design * coef).norm();
  const double amp = std::hypot(c1, c2);
  if (std::abs(c0) < 1e-12) {
    fit.degenerate_mean = true;
    return fit;
  }
  fit.intensity = amp / (M_PI * std::abs(c0));
  if (amp < 1e-12 * std::max(std::abs(c0), 1.0)) {
    return fit;  // constant input: phase conventionally zero
  }
  double phase = std::atan2(c2 / c0, c1 / c0) / kTwoPi;
  if (phase >= 0.5) phase -= 1.0;
  if (phase < -0.5) phase += 1.0;
  fit.phase = phase;
  return fit;
}

double relative_error_const(const Matrix& model, const Matrix& truth) {
  if (model.rows() != truth.rows() || model.cols() != truth.cols()) {
    throw Error("relative_error_const: dimension mismatch");
  }
  const double den = truth.norm();
  if (den == 0.0) throw ZeroTruth("relative_error_const: reference is zero");
  return (model - truth).norm() / den;
}

double relative_error_series(const SeriesView& model, const MatrixFn& truth) {
  if (model.times.empty()) throw Error("relative_error_series: empty series");
  double num = 0.0;
  double den = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < model.times.size(); ++j) {
    if (model.flagged(j)) continue;
    const Matrix ref = truth(model.times[j]);
    num += (model.values[j] - ref).squaredNorm();
    den += ref.squaredNorm();
    ++used;
  }
  if (used == 0) {
    throw AllPhasesFlagged("relative_error_series: every phase is flagged");
  }
  if (den == 0.0) throw ZeroTruth("relative_error_series: reference is zero");
  return std::sqrt(num) / std::sqrt(den);
}

namespace {

struct CleanSeries {
  std::vector<double> times;
  std::vector<const Matrix*> values;
};

CleanSeries drop_flagged(const SeriesView& view) {
  CleanSeries out;
  for (std::size_t j = 0; j < view.times.size(); ++j) {
    if (view.flagged(j)) continue;
    out.times.push_back(view.times[j]);
    out.values.push_back(&view.values[j]);
  }
  return out;
}

// Circular linear interpolation on ascending times in [0, 1).
Matrix interp_circular(const CleanSeries& s, double tau) {
  const std::size_t m = s.times.size();
  auto it = std::upper_bound(s.times.begin(), s.times.end(), tau);
  double t_left, t_right;
  const Matrix *v_left, *v_right;
  if (it == s.times.begin()) {
    t_left = s.times.back() - 1.0;
    v_left = s.values.back();
    t_right = s.times.front();
    v_right = s.values.front();
  } else if (it == s.times.end()) {
    t_left = s.times.back();
    v_left = s.values.back();
    t_right = s.times.front() + 1.0;
    v_right = s.values.front();
  } else {
    const auto i = static_cast<std::size_t>(it - s.times.begin());
    t_left = s.times[i - 1];
    v_left = s.values[i - 1];
    t_right = s.times[i];
    v_right = s.values[i];
  }
  (void)m;
  const double theta = (tau - t_left) / (t_right - t_left);
  return (1.0 - theta) * (*v_left) + theta * (*v_right);
}

}  // namespace

double relative_difference(const SeriesView& a, const SeriesView& b) {
  if (a.times.empty() || b.times.empty()) {
    throw Error("relative_difference: empty series");
  }
  // Compare on the coarser grid; the finer curve is interpolated onto it.
  const bool target_is_b = b.times.size() <= a.times.size();
  const SeriesView& target = target_is_b ? b : a;
  const SeriesView& source = target_is_b ? a : b;
  const CleanSeries clean = drop_flagged(source);
  if (clean.times.size() < 2) {
    throw EmptyOverlap("relative_difference: too few valid phases to interpolate");
  }
  double num = 0.0;
  double den = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < target.times.size(); ++j) {
    if (target.flagged(j)) continue;
    const Matrix interp = interp_circular(clean, target.times[j]);
    const Matrix& native = target.values[j];
    const Matrix& ref = target_is_b ? native : interp;
    const Matrix diff = target_is_b ? Matrix(interp - native) : Matrix(native - interp);
    num += diff.squaredNorm();
    den += ref.squaredNorm();
    ++used;
  }
  if (used == 0) {
    throw EmptyOverlap("relative_difference: no phase survived flag filtering");
  }
  if (den == 0.0) throw ZeroTruth("relative_difference: reference is zero");
  return std::sqrt(num) / std::sqrt(den);
}

PeriodicMatrixSeries interval_average(const PeriodicMatrixSeries& series, int intervals) {
  series.validate();
  const int p = series.phases();
  if (intervals < 1) throw Error("interval_average: need at least one interval");
  if (p % intervals != 0) {
    std::ostringstream os;
    os << "interval_average: " << intervals << " intervals do not divide " << p
       << " phases";
    throw IndivisibleInterval(os.str());
  }
  const int block = p / intervals;
  PeriodicMatrixSeries out;
  out.times.resize(intervals);
  out.values.resize(intervals);
  for (int j = 0; j < intervals; ++j) {
    Matrix acc = Matrix::Zero(series.values.front().rows(),
                              series.values.front().cols());
    for (int r = 0; r < block; ++r) acc += series.values[j * block + r];
    out.values[j] = acc / static_cast<double>(block);
    out.times[j] = (2.0 * j + 1.0) / (2.0 * intervals);
  }
  return out;
}

PeriodicModel interval_average(const PeriodicModel& model, int intervals) {
  const int p = model.phases();
  if (intervals < 1 || p % intervals != 0) {
    std::ostringstream os;
    os << "interval_average: " << intervals << " intervals do not divide " << p
       << " phases";
    throw IndivisibleInterval(os.str());
  }
  const int block = p / intervals;
  const Eigen::Index n = model.dim();
  PeriodicModel out;
  out.estimator = model.estimator;
  out.intervals = intervals;
  out.lag_steps = model.lag_steps;
  out.dt = model.dt;
  out.times.resize(intervals);
  out.dynamics.resize(intervals);
  out.diffusions.resize(intervals);
  out.flags.resize(intervals);
  for (int j = 0; j < intervals; ++j) {
    out.times[j] = (2.0 * j + 1.0) / (2.0 * intervals);
    Matrix acc_a = Matrix::Zero(n, n);
    Matrix acc_q = Matrix::Zero(n, n);
    int kept = 0;
    for (int r = 0; r < block; ++r) {
      const int src = j * block + r;
      if (model.flags[src] != PhaseFlag::ok) continue;
      acc_a += model.dynamics[src];
      acc_q += model.diffusions[src];
      ++kept;
    }
    if (kept == 0) {
      out.flags[j] = PhaseFlag::numerical;
      out.dynamics[j] = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
      out.diffusions[j] = out.dynamics[j];
    } else {
      out.flags[j] = PhaseFlag::ok;
      out.dynamics[j] = acc_a / kept;
      out.diffusions[j] = acc_q / kept;
    }
  }
  return out;
}

std::vector<double> component(const SeriesView& series, Eigen::Index row,
                              Eigen::Index col) {
  std::vector<double> out;
  out.reserve(series.values.size());
  for (const Matrix& v : series.values) out.push_back(v(row, col));
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double theta = pos - static_cast<double>(lo);
  return (1.0 - theta) * values[lo] + theta * values[hi];
}

}  // namespace cslim
