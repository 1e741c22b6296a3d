#include "cslim/models.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace cslim {

namespace {

Matrix nan_matrix(Eigen::Index n) {
  return Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
}

PhaseFlag flag_for(const Error& err) {
  if (dynamic_cast<const EigenvalueOnBranchCut*>(&err)) return PhaseFlag::branch_cut;
  if (dynamic_cast<const SingularCovariance*>(&err)) {
    return PhaseFlag::singular_covariance;
  }
  if (dynamic_cast<const SingularMatrix*>(&err)) {
    return PhaseFlag::singular_covariance;
  }
  return PhaseFlag::numerical;
}

void require_unit_period(int period, double dt, const char* op) {
  if (std::abs(static_cast<double>(period) * dt - 1.0) > 1e-9) {
    std::ostringstream os;
    os << op << ": period * dt = " << static_cast<double>(period) * dt
       << ", but the phase grid assumes a unit period";
    throw Error(os.str());
  }
}

// Exact phase labels: times are (2j+1)P + offset over 2MP, reduced modulo the
// period so a shifted grid wraps and rotates without float drift.
struct PhaseGrid {
  std::vector<double> times;
  std::vector<std::size_t> order;  // source index per ascending output slot
};

PhaseGrid phase_labels(int intervals, int period, long shift_num) {
  const long denom = 2L * intervals * period;
  std::vector<long> nums(intervals);
  for (int j = 0; j < intervals; ++j) {
    long num = (2L * j + 1) * period + shift_num;
    num %= denom;
    if (num < 0) num += denom;
    nums[j] = num;
  }
  PhaseGrid grid;
  grid.order.resize(intervals);
  std::iota(grid.order.begin(), grid.order.end(), std::size_t{0});
  std::sort(grid.order.begin(), grid.order.end(),
            [&](std::size_t a, std::size_t b) { return nums[a] < nums[b]; });
  grid.times.resize(intervals);
  for (int i = 0; i < intervals; ++i) {
    grid.times[i] =
        static_cast<double>(nums[grid.order[i]]) / static_cast<double>(denom);
  }
  return grid;
}

}  // namespace

Matrix green_function(const Matrix& k_0, const Matrix& k_s, double s) {
  detail::require_square(k_0.rows(), k_0.cols(), "green_function");
  if (k_s.rows() != k_0.rows() || k_s.cols() != k_0.cols()) {
    throw Error("green_function: correlation dimension mismatch");
  }
  detail::require_finite(k_0, "green_function");
  detail::require_finite(k_s, "green_function");
  if (!(s > 0.0)) throw Error("green_function: lag must be positive");

  Eigen::JacobiSVD<Matrix> svd(k_0);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smax == 0.0 || smin <= 1e-12 * smax) {
    std::ostringstream os;
    os << "green_function: zero-lag correlation is singular (condition "
       << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity())
       << ")";
    throw SingularCovariance(os.str());
  }

  // ratio = k_s * k_0^{-1}, via k_0^T ratio^T = k_s^T.
  Eigen::PartialPivLU<Matrix> lu(k_0.transpose());
  const Matrix ratio = lu.solve(k_s.transpose()).transpose();
  return mat_log(ratio) / s;
}

Matrix classical_fdr_diffusion(const Matrix& dynamics, const Matrix& covariance) {
  detail::require_square(dynamics.rows(), dynamics.cols(), "classical_fdr_diffusion");
  if (covariance.rows() != dynamics.rows() || covariance.cols() != dynamics.cols()) {
    throw Error("classical_fdr_diffusion: dimension mismatch");
  }
  return symmetrize(Matrix(-(dynamics * covariance +
                             covariance * dynamics.transpose()) /
                           2.0));
}

LimEstimate classical_lim(const TimeSeries& series, long lag_steps) {
  if (lag_steps < 1) throw Error("classical_lim: lag must be at least one step");
  const Matrix k0 = stationary_correlation(series, 0);
  const Matrix ks = stationary_correlation(series, lag_steps);
  LimEstimate est;
  est.dynamics = green_function(k0, ks, static_cast<double>(lag_steps) * series.dt);
  est.covariance = symmetrize(k0);
  est.diffusion = classical_fdr_diffusion(est.dynamics, est.covariance);
  return est;
}

PeriodicMatrixSeries periodic_fdr_diffusion(const PeriodicMatrixSeries& dynamics,
                                            const PeriodicMatrixSeries& covariance,
                                            const PeriodicMatrixSeries& covariance_rate) {
  if (dynamics.phases() != covariance.phases() ||
      dynamics.phases() != covariance_rate.phases()) {
    throw GridMismatch("periodic_fdr_diffusion: phase counts differ");
  }
  for (int j = 0; j < dynamics.phases(); ++j) {
    if (std::abs(dynamics.times[j] - covariance.times[j]) > 1e-9 ||
        std::abs(dynamics.times[j] - covariance_rate.times[j]) > 1e-9) {
      throw GridMismatch("periodic_fdr_diffusion: phase grids are not aligned");
    }
  }
  PeriodicMatrixSeries out;
  out.times = covariance.times;
  out.values.resize(dynamics.phases());
  for (int j = 0; j < dynamics.phases(); ++j) {
    const Matrix& a = dynamics.values[j];
    const Matrix& c = covariance.values[j];
    out.values[j] = symmetrize(
        Matrix((covariance_rate.values[j] - a * c - c * a.transpose()) / 2.0));
  }
  return out;
}

PeriodicModel cs_lim_from_interval_stats(const std::vector<Matrix>& k0,
                                         const std::vector<Matrix>& ks,
                                         int period, int intervals, int lag_steps,
                                         double dt, CsVariant variant) {
  if (intervals < 1) throw Error("cs_lim: need at least one interval");
  if (k0.size() != static_cast<std::size_t>(intervals) || ks.size() != k0.size()) {
    throw Error("cs_lim: interval statistics length mismatch");
  }
  if (period % intervals != 0) {
    std::ostringstream os;
    os << "cs_lim: " << intervals << " intervals do not divide " << period
       << " phases";
    throw IndivisibleInterval(os.str());
  }
  if (lag_steps < 1) throw Error("cs_lim: lag must be at least one step");
  require_unit_period(period, dt, "cs_lim");
  const Eigen::Index n = k0.front().rows();

  PeriodicMatrixSeries cov;
  cov.times.resize(intervals);
  cov.values.resize(intervals);
  for (int j = 0; j < intervals; ++j) {
    cov.times[j] = (2.0 * j + 1.0) / (2.0 * intervals);
    cov.values[j] = symmetrize(k0[j]);
  }

  PeriodicMatrixSeries dyn;
  dyn.times = cov.times;
  dyn.values.resize(intervals);
  std::vector<PhaseFlag> flags(intervals, PhaseFlag::ok);
  const double lag_time = static_cast<double>(lag_steps) * dt;
  for (int j = 0; j < intervals; ++j) {
    try {
      dyn.values[j] = green_function(k0[j], ks[j], lag_time);
    } catch (const Error& err) {
      flags[j] = flag_for(err);
      dyn.values[j] = nan_matrix(n);
    }
  }

  const PeriodicMatrixSeries rate = periodic_diff(
      cov, variant == CsVariant::e ? DiffScheme::forward : DiffScheme::central);
  const PeriodicMatrixSeries diff = periodic_fdr_diffusion(dyn, cov, rate);

  // The e variant's pairs start at the interval's sample phases, whose mean
  // sits half a subsampling step before the centre, and span k further steps;
  // its labels carry the net (k-1)/2-step shift, wrapped around the period.
  // With one interval per phase and k = 1 this lands exactly on the local
  // estimator's grid.
  const long shift_num = variant == CsVariant::e
                             ? static_cast<long>(lag_steps - 1) * intervals
                             : 0;
  const PhaseGrid grid = phase_labels(intervals, period, shift_num);

  PeriodicModel model;
  model.estimator = variant == CsVariant::e ? "ecslim" : "cslim";
  model.intervals = intervals;
  model.lag_steps = lag_steps;
  model.dt = dt;
  model.times = grid.times;
  model.dynamics.resize(intervals);
  model.diffusions.resize(intervals);
  model.flags.resize(intervals);
  for (int i = 0; i < intervals; ++i) {
    const std::size_t src = grid.order[i];
    model.dynamics[i] = dyn.values[src];
    model.diffusions[i] = diff.values[src];
    model.flags[i] = flags[src];
  }
  return model;
}

PeriodicModel cs_lim(const TimeSeries& series, int period, int intervals,
                     int lag_steps, CsVariant variant) {
  series.validate();
  if (period < 1) throw Error("cs_lim: period must be positive");
  require_unit_period(period, series.dt, "cs_lim");
  if (intervals < 1) throw Error("cs_lim: need at least one interval");
  if (period % intervals != 0) {
    std::ostringstream os;
    os << "cs_lim: " << intervals << " intervals do not divide " << period
       << " phases";
    throw IndivisibleInterval(os.str());
  }
  if (lag_steps < 1) throw Error("cs_lim: lag must be at least one step");
  const long cycles = series.count() / period;
  if (cycles < 2) throw Error("cs_lim: need at least two complete periods");

  const Eigen::Index n = series.dim();
  const int block = period / intervals;
  std::vector<Matrix> k0(intervals, Matrix::Zero(n, n));
  std::vector<Matrix> ks(intervals, Matrix::Zero(n, n));
  std::vector<long> used(intervals, 0);
  // One pooled pair set per interval; a pair contributes to both lags or to
  // neither, so the two statistics stay consistent at the record tail.
  for (long c = 0; c < cycles; ++c) {
    for (int j = 0; j < intervals; ++j) {
      for (int r = 0; r < block; ++r) {
        const long base = c * period + j * block + r;
        const long lead = base + lag_steps;
        if (lead >= series.count()) continue;
        k0[j].noalias() +=
            series.samples.col(base) * series.samples.col(base).transpose();
        ks[j].noalias() +=
            series.samples.col(lead) * series.samples.col(base).transpose();
        ++used[j];
      }
    }
  }
  for (int j = 0; j < intervals; ++j) {
    if (used[j] == 0) {
      std::ostringstream os;
      os << "cs_lim: no admissible pair in interval " << j;
      throw EmptyCell(os.str());
    }
    k0[j] /= static_cast<double>(used[j]);
    ks[j] /= static_cast<double>(used[j]);
  }
  return cs_lim_from_interval_stats(k0, ks, period, intervals, lag_steps,
                                    series.dt, variant);
}

PeriodicModel l_cs_lim_from_field(const CorrelationField& field, double dt) {
  if (field.max_lag < 1) {
    throw Error("l_cs_lim: correlation field must hold lags 0 and 1");
  }
  const int p = field.period;
  if (p < 2) throw TooFewPhases("l_cs_lim: need at least two phases");
  require_unit_period(p, dt, "l_cs_lim");
  const Eigen::Index n = field.at(0, 0).rows();

  PeriodicMatrixSeries cov;
  cov.times.resize(p);
  cov.values.resize(p);
  for (int t = 0; t < p; ++t) {
    cov.times[t] = static_cast<double>(t) / p;
    cov.values[t] = symmetrize(field.at(0, t));
  }

  PeriodicMatrixSeries dyn;
  dyn.times = cov.times;
  dyn.values.resize(p);
  std::vector<PhaseFlag> flags(p, PhaseFlag::ok);
  for (int t = 0; t < p; ++t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov.values[t]);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (es.info() != Eigen::Success || !(lmin > 0.0) || lmax / lmin > 1e12) {
      flags[t] = PhaseFlag::singular_covariance;
      dyn.values[t] = nan_matrix(n);
      continue;
    }
    const Matrix slope = (field.at(1, t) - cov.values[t]) / dt;
    const Matrix cov_inv = es.eigenvectors() *
                           es.eigenvalues().cwiseInverse().asDiagonal() *
                           es.eigenvectors().transpose();
    dyn.values[t] = slope * cov_inv;
  }

  const PeriodicMatrixSeries rate = periodic_diff(cov, DiffScheme::forward);
  const PeriodicMatrixSeries diff = periodic_fdr_diffusion(dyn, cov, rate);

  PeriodicModel model;
  model.estimator = "lcslim";
  model.intervals = p;
  model.lag_steps = 1;
  model.dt = dt;
  model.times.resize(p);
  model.dynamics = dyn.values;
  model.diffusions = diff.values;
  model.flags = flags;
  // Forward stencils centre half a step after the phase node.
  for (int t = 0; t < p; ++t) {
    model.times[t] = (2.0 * t + 1.0) / (2.0 * p);
  }
  return model;
}

PeriodicModel l_cs_lim(const TimeSeries& series, int period) {
  series.validate();
  if (period < 1) throw Error("l_cs_lim: period must be positive");
  require_unit_period(period, series.dt, "l_cs_lim");
  const long cycles = series.count() / period;
  if (cycles < 2) throw Error("l_cs_lim: need at least two complete periods");
  return l_cs_lim_from_field(correlation_field(series, period, 1), series.dt);
}

}  // namespace cslim
