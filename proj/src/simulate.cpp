#include "cslim/simulate.hpp"

#include <cmath>
#include <sstream>

namespace cslim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kBlowupLimit = 1e12;

// Number of steps per unit period; dt must divide the period to 1e-9.
long steps_per_period(double dt) {
  if (!(dt > 0.0)) throw Error("sample_path: dt must be positive");
  const long s = std::lround(1.0 / dt);
  if (s < 1 || std::abs(static_cast<double>(s) * dt - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "sample_path: dt = " << dt << " does not divide the unit period";
    throw Error(os.str());
  }
  return s;
}

void check_psd_tolerant(const Matrix& q, const char* what) {
  detail::require_symmetric<double>(q, what);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(q));
  if (es.info() != Eigen::Success) {
    throw Error(std::string(what) + ": eigenvalue iteration failed");
  }
  const double norm = std::max(q.norm(), 1.0);
  if (es.eigenvalues().minCoeff() < -1e-10 * norm) {
    throw NotPSD(std::string(what) + ": diffusion matrix has a negative eigenvalue");
  }
}

}  // namespace

SystemSpec SystemSpec::sinusoidal(const Matrix& mean_dynamics, double dyn_intensity,
                                  const Matrix& mean_diffusion, double diff_intensity) {
  SystemSpec spec;
  spec.impl_ = SinusoidalSystem{mean_dynamics, dyn_intensity, mean_diffusion,
                                diff_intensity};
  return spec;
}

SystemSpec SystemSpec::tabulated(std::vector<Matrix> dynamics,
                                 std::vector<Matrix> diffusions) {
  if (dynamics.empty() || dynamics.size() != diffusions.size()) {
    throw Error("SystemSpec: tabulated coefficients must be nonempty and paired");
  }
  const Eigen::Index n = dynamics.front().rows();
  for (std::size_t j = 0; j < dynamics.size(); ++j) {
    if (dynamics[j].rows() != n || dynamics[j].cols() != n ||
        diffusions[j].rows() != n || diffusions[j].cols() != n) {
      throw Error("SystemSpec: tabulated entries must share one square dimension");
    }
    if (!dynamics[j].allFinite() || !diffusions[j].allFinite()) {
      throw Error("SystemSpec: tabulated entries must be finite");
    }
    detail::require_symmetric<double>(diffusions[j], "SystemSpec");
  }
  SystemSpec spec;
  spec.impl_ = TabulatedSystem{std::move(dynamics), std::move(diffusions)};
  return spec;
}

Eigen::Index SystemSpec::dim() const {
  if (const auto* s = std::get_if<SinusoidalSystem>(&impl_)) {
    return s->mean_dynamics.rows();
  }
  return std::get<TabulatedSystem>(impl_).dynamics.front().rows();
}

namespace {

double wrap_phase(double t) {
  double p = t - std::floor(t);
  if (p >= 1.0) p = 0.0;  // guards floor rounding at integer t
  return p;
}

std::size_t tabulated_cell(double t, std::size_t cells) {
  const double p = wrap_phase(t);
  auto idx = static_cast<std::size_t>(p * static_cast<double>(cells));
  return idx >= cells ? cells - 1 : idx;
}

}  // namespace

Matrix SystemSpec::dynamics_at(double t) const {
  if (const auto* s = std::get_if<SinusoidalSystem>(&impl_)) {
    const double factor =
        1.0 + s->dyn_intensity * M_PI * std::sin(kTwoPi * wrap_phase(t));
    return factor * s->mean_dynamics;
  }
  const auto& tab = std::get<TabulatedSystem>(impl_);
  return tab.dynamics[tabulated_cell(t, tab.dynamics.size())];
}

Matrix SystemSpec::diffusion_at(double t) const {
  if (const auto* s = std::get_if<SinusoidalSystem>(&impl_)) {
    const double factor =
        1.0 + s->diff_intensity * M_PI * std::sin(kTwoPi * wrap_phase(t));
    return factor * s->mean_diffusion;
  }
  const auto& tab = std::get<TabulatedSystem>(impl_);
  return tab.diffusions[tabulated_cell(t, tab.diffusions.size())];
}

SystemSpec sinusoidal_system(const Matrix& mean_dynamics, double dyn_intensity,
                             const Matrix& mean_diffusion, double diff_intensity) {
  detail::require_square(mean_dynamics.rows(), mean_dynamics.cols(),
                         "sinusoidal_system");
  if (mean_diffusion.rows() != mean_dynamics.rows() ||
      mean_diffusion.cols() != mean_dynamics.cols()) {
    throw Error("sinusoidal_system: dynamics/diffusion dimension mismatch");
  }
  detail::require_finite(mean_dynamics, "sinusoidal_system");
  detail::require_finite(mean_diffusion, "sinusoidal_system");
  if (!std::isfinite(dyn_intensity) || !std::isfinite(diff_intensity)) {
    throw Error("sinusoidal_system: intensities must be finite");
  }
  if (!is_stable(mean_dynamics)) {
    throw UnstableMean("sinusoidal_system: mean dynamics matrix is not stable");
  }
  check_psd_tolerant(mean_diffusion, "sinusoidal_system");
  if (std::abs(diff_intensity) * M_PI > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "sinusoidal_system: |b|*pi = " << std::abs(diff_intensity) * M_PI
       << " > 1 drives the diffusion negative";
    throw DiffusionGoesNegative(os.str());
  }
  return SystemSpec::sinusoidal(mean_dynamics, dyn_intensity, mean_diffusion,
                                diff_intensity);
}

std::pair<Matrix, Matrix> random_stable_system(int n, RandomStream& stream) {
  if (n < 1) throw Error("random_stable_system: dimension must be positive");
  constexpr int kBudget = 10000;
  Matrix a(n, n);
  bool found = false;
  for (int attempt = 0; attempt < kBudget; ++attempt) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = stream.uniform(-5.0, 5.0);
    }
    if (is_stable(a)) {
      found = true;
      break;
    }
  }
  if (!found) {
    std::ostringstream os;
    os << "random_stable_system: no stable draw in " << kBudget
       << " attempts at dimension " << n;
    throw RejectionBudgetExceeded(os.str());
  }
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = stream.uniform(-1.0, 1.0);
  }
  Matrix q = g.transpose() * g + 0.1 * Matrix::Identity(n, n);
  return {a, symmetrize(q)};
}

TimeSeries sample_path(const SystemSpec& spec, double dt, long periods,
                       RandomStream& stream, const Vector& x0,
                       long burn_in_periods) {
  const long s = steps_per_period(dt);
  if (periods < 1) throw Error("sample_path: need at least one period");
  if (burn_in_periods < 0) throw Error("sample_path: negative burn-in");
  const Eigen::Index n = spec.dim();
  if (x0.size() != n) throw Error("sample_path: initial state dimension mismatch");
  if (!x0.allFinite()) throw Error("sample_path: initial state is not finite");

  // Per-phase step operators: x <- (I + dt A(t_j)) x + sqrt(2 dt Q(t_j)) xi.
  std::vector<Matrix> propagator(static_cast<std::size_t>(s));
  std::vector<Matrix> noise_op(static_cast<std::size_t>(s));
  const Matrix eye = Matrix::Identity(n, n);
  for (long j = 0; j < s; ++j) {
    const double t = static_cast<double>(j) * dt;
    propagator[j] = eye + dt * spec.dynamics_at(t);
    Matrix qdt = 2.0 * dt * spec.diffusion_at(t);
    noise_op[j] = spd_sqrt(qdt);
  }

  const long recorded = periods * s + 1;
  TimeSeries out;
  out.dt = dt;
  out.origin = 0.0;
  out.samples.resize(n, recorded);

  const long burn_steps = burn_in_periods * s;
  const long total_steps = burn_steps + periods * s;

  if (n == 1) {
    // Scalar loop; the dense path spends most of its time in dispatch overhead
    // at this size.
    std::vector<double> prop(static_cast<std::size_t>(s)), amp(static_cast<std::size_t>(s));
    for (long j = 0; j < s; ++j) {
      prop[j] = propagator[j](0, 0);
      amp[j] = noise_op[j](0, 0);
    }
    double x = x0(0);
    long col = 0;
    for (long m = 0; m <= total_steps; ++m) {
      if (m >= burn_steps) out.samples(0, col++) = x;
      if (m == total_steps) break;
      const long j = m % s;
      x = prop[j] * x + amp[j] * stream.normal();
      if (std::abs(x) > kBlowupLimit) {
        std::ostringstream os;
        os << "sample_path: state magnitude exceeded " << kBlowupLimit
           << " at step " << m + 1;
        throw NumericalBlowup(os.str());
      }
    }
    return out;
  }

  Vector x = x0;
  Vector xi(n);
  Vector xnext(n);
  long col = 0;
  for (long m = 0; m <= total_steps; ++m) {
    if (m >= burn_steps) out.samples.col(col++) = x;
    if (m == total_steps) break;
    const long j = m % s;
    stream.fill_normal(xi);
    xnext.noalias() = propagator[j] * x;
    xnext.noalias() += noise_op[j] * xi;
    x.swap(xnext);
    if (x.cwiseAbs().maxCoeff() > kBlowupLimit) {
      std::ostringstream os;
      os << "sample_path: state magnitude exceeded " << kBlowupLimit
         << " at step " << m + 1;
      throw NumericalBlowup(os.str());
    }
  }
  return out;
}

TimeSeries subsample(const TimeSeries& series, long stride) {
  series.validate();
  if (stride < 1) throw Error("subsample: stride must be positive");
  const long kept = (series.count() - 1) / stride + 1;
  if (kept < 2) throw Error("subsample: stride leaves fewer than two samples");
  TimeSeries out;
  out.dt = series.dt * static_cast<double>(stride);
  out.origin = series.origin;
  out.samples.resize(series.dim(), kept);
  for (long i = 0; i < kept; ++i) {
    out.samples.col(i) = series.samples.col(i * stride);
  }
  return out;
}

}  // namespace cslim
