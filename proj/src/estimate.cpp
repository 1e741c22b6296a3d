#include "cslim/estimate.hpp"

#include <cmath>
#include <sstream>

namespace cslim {

Matrix stationary_correlation(const TimeSeries& series, long lag_steps) {
  series.validate();
  if (lag_steps < 0) throw Error("stationary_correlation: negative lag");
  const long pairs = series.count() - lag_steps;
  if (pairs < 1) {
    std::ostringstream os;
    os << "stationary_correlation: lag " << lag_steps << " exceeds record of "
       << series.count() << " samples";
    throw LagExceedsRecord(os.str());
  }
  const auto lead = series.samples.middleCols(lag_steps, pairs);
  const auto base = series.samples.middleCols(0, pairs);
  return (lead * base.transpose()) / static_cast<double>(pairs);
}

namespace {

long complete_periods(const TimeSeries& series, int period, const char* op) {
  if (period < 1) throw Error(std::string(op) + ": period must be positive");
  const long cycles = series.count() / period;
  if (cycles < 1) {
    throw Error(std::string(op) + ": record shorter than one period");
  }
  return cycles;
}

}  // namespace

Matrix cyclo_correlation(const TimeSeries& series, int period, long lag_steps,
                         int phase_index) {
  series.validate();
  if (lag_steps < 0) throw Error("cyclo_correlation: negative lag");
  if (phase_index < 0 || phase_index >= period) {
    throw Error("cyclo_correlation: phase index outside the period");
  }
  const long cycles = complete_periods(series, period, "cyclo_correlation");
  const Eigen::Index n = series.dim();
  Matrix sum = Matrix::Zero(n, n);
  long used = 0;
  for (long c = 0; c < cycles; ++c) {
    const long base = c * period + phase_index;
    const long lead = base + lag_steps;
    if (lead >= series.count()) continue;
    sum.noalias() += series.samples.col(lead) * series.samples.col(base).transpose();
    ++used;
  }
  if (used == 0) {
    std::ostringstream os;
    os << "cyclo_correlation: no pair with lag " << lag_steps << " at phase "
       << phase_index << " fits the record";
    throw EmptyCell(os.str());
  }
  return sum / static_cast<double>(used);
}

CorrelationField correlation_field(const TimeSeries& series, int period,
                                   int max_lag) {
  series.validate();
  if (max_lag < 0) throw Error("correlation_field: negative maximum lag");
  const long cycles = complete_periods(series, period, "correlation_field");
  const Eigen::Index n = series.dim();

  CorrelationField field;
  field.period = period;
  field.max_lag = max_lag;
  field.cells.assign(static_cast<std::size_t>(max_lag + 1) * period,
                     Matrix::Zero(n, n));
  field.counts.assign(field.cells.size(), 0);

  for (long c = 0; c < cycles; ++c) {
    for (int t = 0; t < period; ++t) {
      const long base = c * period + t;
      for (int s = 0; s <= max_lag; ++s) {
        const long lead = base + s;
        if (lead >= series.count()) break;
        field.at(s, t).noalias() +=
            series.samples.col(lead) * series.samples.col(base).transpose();
        ++field.counts[static_cast<std::size_t>(s) * period + t];
      }
    }
  }
  for (std::size_t i = 0; i < field.cells.size(); ++i) {
    if (field.counts[i] == 0) {
      std::ostringstream os;
      os << "correlation_field: empty cell at lag " << i / period << ", phase "
         << i % period;
      throw EmptyCell(os.str());
    }
    field.cells[i] /= static_cast<double>(field.counts[i]);
  }
  return field;
}

PeriodicMatrixSeries covariance_series(const TimeSeries& series, int period) {
  const CorrelationField field = correlation_field(series, period, 0);
  PeriodicMatrixSeries out;
  out.times.resize(period);
  out.values.resize(period);
  for (int t = 0; t < period; ++t) {
    out.times[t] = static_cast<double>(t) / period;
    out.values[t] = symmetrize(field.at(0, t));
  }
  return out;
}

PeriodicMatrixSeries periodic_diff(const PeriodicMatrixSeries& series,
                                   DiffScheme scheme) {
  series.validate();
  const int p = series.phases();
  const int need = scheme == DiffScheme::forward ? 2 : 3;
  if (p < need) {
    std::ostringstream os;
    os << "periodic_diff: need at least " << need << " phases, got " << p;
    throw TooFewPhases(os.str());
  }
  // The stencil assumes one full period covered at uniform spacing.
  const double h = 1.0 / p;
  for (int j = 0; j < p; ++j) {
    const double next = j + 1 < p ? series.times[j + 1] : series.times[0] + 1.0;
    if (std::abs(next - series.times[j] - h) > 1e-9) {
      throw GridMismatch("periodic_diff: phase grid is not uniform over the period");
    }
  }

  PeriodicMatrixSeries out;
  out.times = series.times;
  out.values.resize(p);
  for (int j = 0; j < p; ++j) {
    if (scheme == DiffScheme::forward) {
      out.values[j] = (series.values[(j + 1) % p] - series.values[j]) / h;
    } else {
      out.values[j] =
          (series.values[(j + 1) % p] - series.values[(j + p - 1) % p]) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace cslim
