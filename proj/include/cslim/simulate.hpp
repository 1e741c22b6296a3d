#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "cslim/matfun.hpp"
#include "cslim/random.hpp"
#include "cslim/types.hpp"

namespace cslim {

// A(t) = (1 + a*pi*sin(2*pi*t)) * Abar, Q(t) = (1 + b*pi*sin(2*pi*t)) * Qbar.
struct SinusoidalSystem {
  Matrix mean_dynamics;
  double dyn_intensity = 0.0;
  Matrix mean_diffusion;
  double diff_intensity = 0.0;
};

// Coefficients tabulated on a uniform phase grid, held constant over each cell
// (zero-order hold).
struct TabulatedSystem {
  std::vector<Matrix> dynamics;
  std::vector<Matrix> diffusions;
};

// 1-periodic linear system specification used by the path sampler.
class SystemSpec {
 public:
  static SystemSpec sinusoidal(const Matrix& mean_dynamics, double dyn_intensity,
                               const Matrix& mean_diffusion, double diff_intensity);
  static SystemSpec tabulated(std::vector<Matrix> dynamics,
                              std::vector<Matrix> diffusions);

  Eigen::Index dim() const;
  Matrix dynamics_at(double t) const;
  Matrix diffusion_at(double t) const;

  const SinusoidalSystem* as_sinusoidal() const {
    return std::get_if<SinusoidalSystem>(&impl_);
  }

 private:
  std::variant<SinusoidalSystem, TabulatedSystem> impl_;
};

// Validated construction of the sinusoidal family.  The mean dynamics must be
// stable and the mean diffusion PSD; |b|*pi > 1 would drive Q(t) negative.
SystemSpec sinusoidal_system(const Matrix& mean_dynamics, double dyn_intensity,
                             const Matrix& mean_diffusion, double diff_intensity);

// Rejection-samples a stable mean dynamics matrix with entries uniform on
// (-5, 5), then builds a generic SPD mean diffusion G^T G + 0.1 I with G
// entries uniform on (-1, 1).  Throws RejectionBudgetExceeded after 10000
// failed stability draws.
std::pair<Matrix, Matrix> random_stable_system(int n, RandomStream& stream);

// Euler-Maruyama path of dx = A(t) x dt + sqrt(2 Q(t)) dW, recorded at every
// step.  dt must divide the unit period exactly; the returned record covers
// [0, periods] inclusive after discarding burn_in_periods whole periods.
TimeSeries sample_path(const SystemSpec& spec, double dt, long periods,
                       RandomStream& stream, const Vector& x0,
                       long burn_in_periods = 0);

// Keeps every stride-th sample starting from the first.
TimeSeries subsample(const TimeSeries& series, long stride);

}  // namespace cslim
