#pragma once

#include <span>
#include <string>
#include <vector>

#include "cslim/errors.hpp"
#include "cslim/matfun.hpp"

namespace cslim {

// Uniformly sampled vector-valued record.  Column m of samples is the state at
// time origin + m*dt.
struct TimeSeries {
  double dt = 0.0;
  double origin = 0.0;
  Matrix samples;  // dim x count

  Eigen::Index dim() const { return samples.rows(); }
  Eigen::Index count() const { return samples.cols(); }
  double time_at(Eigen::Index m) const { return origin + static_cast<double>(m) * dt; }

  void validate() const {
    if (!(dt > 0.0)) throw Error("TimeSeries: dt must be positive");
    if (samples.rows() < 1 || samples.cols() < 2) {
      throw Error("TimeSeries: need at least one component and two samples");
    }
    if (!samples.allFinite()) throw Error("TimeSeries: non-finite samples");
  }
};

// Matrix-valued function of phase, tabulated at ascending times in [0, 1).
struct PeriodicMatrixSeries {
  std::vector<double> times;
  std::vector<Matrix> values;

  int phases() const { return static_cast<int>(times.size()); }
  Eigen::Index dim() const { return values.empty() ? 0 : values.front().rows(); }

  void validate() const {
    if (times.size() != values.size()) {
      throw Error("PeriodicMatrixSeries: times/values length mismatch");
    }
    if (times.empty()) throw Error("PeriodicMatrixSeries: empty series");
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (!(times[j] >= 0.0) || !(times[j] < 1.0)) {
        throw Error("PeriodicMatrixSeries: times must lie in [0,1)");
      }
      if (j > 0 && !(times[j] > times[j - 1])) {
        throw Error("PeriodicMatrixSeries: times must ascend");
      }
      if (values[j].rows() != values.front().rows() ||
          values[j].cols() != values.front().cols()) {
        throw Error("PeriodicMatrixSeries: inconsistent matrix dimensions");
      }
    }
  }
};

// Two-point correlation tabulated over (lag, phase) cells.  Entry (s, t) holds
// the average of x(t+s) x(t)^T over complete periods, with pairs whose lead
// index falls off the record dropped and the cell renormalized by its count.
struct CorrelationField {
  int period = 0;    // samples per period
  int max_lag = 0;   // largest tabulated lag, in samples
  std::vector<Matrix> cells;   // (max_lag+1) * period entries, lag-major
  std::vector<long> counts;

  const Matrix& at(int lag, int phase) const {
    return cells[static_cast<std::size_t>(lag) * period + phase];
  }
  Matrix& at(int lag, int phase) {
    return cells[static_cast<std::size_t>(lag) * period + phase];
  }
  long count_at(int lag, int phase) const {
    return counts[static_cast<std::size_t>(lag) * period + phase];
  }
};

// Per-phase estimator outcome.  Flagged phases carry NaN matrices and are
// excluded from error metrics downstream.
enum class PhaseFlag : int {
  ok = 0,
  branch_cut = 1,
  singular_covariance = 2,
  numerical = 3,
};

std::string to_string(PhaseFlag flag);
PhaseFlag phase_flag_from_string(const std::string& s);

// A fitted periodic model: dynamics A(t) and diffusion Q(t) on a common phase
// grid, with the stencil hyperparameters that produced it.
struct PeriodicModel {
  std::string estimator;  // "lim", "cslim", "ecslim", "lcslim"
  int intervals = 0;      // M
  int lag_steps = 0;      // k
  double dt = 0.0;        // sampling step of the fitted record
  std::vector<double> times;
  std::vector<Matrix> dynamics;
  std::vector<Matrix> diffusions;
  std::vector<PhaseFlag> flags;

  int phases() const { return static_cast<int>(times.size()); }
  Eigen::Index dim() const { return dynamics.empty() ? 0 : dynamics.front().rows(); }
  int flagged_count() const {
    int n = 0;
    for (PhaseFlag f : flags) n += (f != PhaseFlag::ok);
    return n;
  }
};

// Lightweight view of one matrix-valued periodic curve, used by the metric
// functions so PeriodicModel fields and bare series share one code path.
struct SeriesView {
  std::span<const double> times;
  std::span<const Matrix> values;
  std::span<const PhaseFlag> flags;  // empty means all phases valid

  bool flagged(std::size_t j) const {
    return !flags.empty() && flags[j] != PhaseFlag::ok;
  }
};

enum class ModelField { dynamics, diffusion };

inline SeriesView view(const PeriodicModel& model, ModelField field) {
  return SeriesView{model.times,
                    field == ModelField::dynamics ? model.dynamics : model.diffusions,
                    model.flags};
}

inline SeriesView view(const PeriodicMatrixSeries& series) {
  return SeriesView{series.times, series.values, {}};
}

}  // namespace cslim
