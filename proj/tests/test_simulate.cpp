#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cslim/simulate.hpp"

using namespace cslim;

namespace {

Matrix scalar(double v) {
  Matrix m(1, 1);
  m << v;
  return m;
}

}  // namespace

TEST_CASE("sinusoidal coefficients follow the stated form") {
  const SystemSpec spec = sinusoidal_system(scalar(-1.0), 0.2, scalar(1.0), 0.3);
  CHECK(spec.dim() == 1);
  CHECK(spec.dynamics_at(0.0)(0, 0) == doctest::Approx(-1.0));
  CHECK(spec.dynamics_at(0.25)(0, 0) == doctest::Approx(-(1.0 + 0.2 * M_PI)));
  CHECK(spec.diffusion_at(0.75)(0, 0) == doctest::Approx(1.0 - 0.3 * M_PI));
  // 1-periodic: t and t+1 give the same coefficients.
  CHECK(spec.dynamics_at(1.25)(0, 0) == doctest::Approx(spec.dynamics_at(0.25)(0, 0)));
  CHECK(spec.dynamics_at(-0.75)(0, 0) == doctest::Approx(spec.dynamics_at(0.25)(0, 0)));
}

TEST_CASE("sinusoidal_system validates its inputs") {
  CHECK_THROWS_AS((void)sinusoidal_system(scalar(0.5), 0.2, scalar(1.0), 0.0),
                  UnstableMean);
  CHECK_THROWS_AS((void)sinusoidal_system(scalar(-1.0), 0.2, scalar(1.0), 0.5),
                  DiffusionGoesNegative);
  CHECK_THROWS_AS((void)sinusoidal_system(scalar(-1.0), 0.2, scalar(-1.0), 0.0),
                  NotPSD);
  Matrix asym(2, 2);
  asym << 1, 0.5, -0.5, 1;
  Matrix a2 = -Matrix::Identity(2, 2);
  CHECK_THROWS_AS((void)sinusoidal_system(a2, 0.2, asym, 0.0), NotPSD);
  // |b| = 1/pi sits exactly on the admissible boundary.
  CHECK_NOTHROW((void)sinusoidal_system(scalar(-1.0), 0.2, scalar(1.0), 1.0 / M_PI));
}

TEST_CASE("tabulated systems hold each cell constant") {
  std::vector<Matrix> as = {scalar(-1.0), scalar(-2.0)};
  std::vector<Matrix> qs = {scalar(1.0), scalar(0.5)};
  const SystemSpec spec = SystemSpec::tabulated(as, qs);
  CHECK(spec.dynamics_at(0.0)(0, 0) == doctest::Approx(-1.0));
  CHECK(spec.dynamics_at(0.49)(0, 0) == doctest::Approx(-1.0));
  CHECK(spec.dynamics_at(0.5)(0, 0) == doctest::Approx(-2.0));
  CHECK(spec.dynamics_at(0.999)(0, 0) == doctest::Approx(-2.0));
  CHECK(spec.dynamics_at(1.0)(0, 0) == doctest::Approx(-1.0));
  CHECK(spec.diffusion_at(0.6)(0, 0) == doctest::Approx(0.5));

  CHECK_THROWS_AS((void)SystemSpec::tabulated({}, {}), Error);
  CHECK_THROWS_AS((void)SystemSpec::tabulated({scalar(-1.0)}, {}), Error);
  Matrix asym(2, 2);
  asym << 1, 0.5, -0.5, 1;
  CHECK_THROWS_AS(
      (void)SystemSpec::tabulated({-Matrix::Identity(2, 2)}, {asym}), NotPSD);
}

TEST_CASE("random_stable_system draws valid deterministic systems") {
  for (int n = 1; n <= 4; ++n) {
    RandomStream s1(42, 7), s2(42, 7);
    auto [a1, q1] = random_stable_system(n, s1);
    auto [a2, q2] = random_stable_system(n, s2);
    CHECK(a1 == a2);
    CHECK(q1 == q2);
    CHECK(is_stable(a1));
    Eigen::SelfAdjointEigenSolver<Matrix> es(q1);
    CHECK(es.eigenvalues().minCoeff() >= 0.1 - 1e-12);
    CHECK(a1.cwiseAbs().maxCoeff() <= 5.0);
  }
}

TEST_CASE("sample_path shape, grid, and determinism") {
  const SystemSpec spec = sinusoidal_system(scalar(-1.0), 0.2, scalar(1.0), 0.3);
  RandomStream s1(9, 1), s2(9, 1);
  const Vector x0 = Vector::Zero(1);
  const TimeSeries p1 = sample_path(spec, 0.01, 3, s1, x0);
  const TimeSeries p2 = sample_path(spec, 0.01, 3, s2, x0);
  CHECK(p1.count() == 301);
  CHECK(p1.dt == doctest::Approx(0.01));
  CHECK(p1.origin == doctest::Approx(0.0));
  CHECK(p1.samples == p2.samples);
  CHECK(p1.samples(0, 0) == 0.0);

  CHECK_THROWS_WITH_AS((void)sample_path(spec, 0.003, 3, s1, x0),
                       doctest::Contains("does not divide"), Error);
  CHECK_THROWS_AS((void)sample_path(spec, 0.01, 0, s1, x0), Error);
  CHECK_THROWS_AS((void)sample_path(spec, 0.01, 3, s1, Vector::Zero(2)), Error);
}

TEST_CASE("burn-in discards whole periods but keeps the draw sequence") {
  const SystemSpec spec = sinusoidal_system(scalar(-1.0), 0.2, scalar(1.0), 0.3);
  const Vector x0 = Vector::Constant(1, 0.7);
  RandomStream s1(11, 0), s2(11, 0);
  const TimeSeries burned = sample_path(spec, 0.01, 3, s1, x0, 2);
  const TimeSeries full = sample_path(spec, 0.01, 5, s2, x0, 0);
  CHECK(burned.count() == 301);
  // Same stream and draw order, so the burned record is the tail of the full one.
  CHECK(burned.samples == full.samples.rightCols(301));
}

TEST_CASE("scalar fast path reproduces a manual Euler replay") {
  std::vector<Matrix> as = {scalar(-1.0), scalar(-3.0)};
  std::vector<Matrix> qs = {scalar(0.8), scalar(0.4)};
  const SystemSpec spec = SystemSpec::tabulated(as, qs);
  const double dt = 0.25;
  RandomStream lib(5, 2);
  const TimeSeries path = sample_path(spec, dt, 2, lib, Vector::Constant(1, 1.0));

  RandomStream manual(5, 2);
  double x = 1.0;
  for (long m = 0; m < 8; ++m) {
    const double a = (m % 4 < 2) ? -1.0 : -3.0;
    const double q = (m % 4 < 2) ? 0.8 : 0.4;
    CHECK(path.samples(0, m) == doctest::Approx(x).epsilon(1e-14));
    x = (1.0 + dt * a) * x + std::sqrt(2.0 * dt * q) * manual.normal();
  }
  CHECK(path.samples(0, 8) == doctest::Approx(x).epsilon(1e-14));
}

TEST_CASE("dense path reproduces a manual Euler replay") {
  Matrix a(2, 2), q(2, 2);
  a << -1.0, 0.5, -0.3, -2.0;
  q << 1.0, 0.2, 0.2, 0.5;
  const SystemSpec spec = SystemSpec::tabulated({a}, {q});
  const double dt = 0.5;
  RandomStream lib(6, 3);
  Vector x0(2);
  x0 << 0.3, -0.1;
  const TimeSeries path = sample_path(spec, dt, 2, lib, x0);

  RandomStream manual(6, 3);
  const Matrix prop = Matrix::Identity(2, 2) + dt * a;
  const Matrix amp = spd_sqrt(Matrix(2.0 * dt * q));
  Vector x = x0;
  for (long m = 0; m < 4; ++m) {
    CHECK((path.samples.col(m) - x).norm() <= 1e-14);
    Vector xi(2);
    xi << manual.normal(), manual.normal();
    x = prop * x + amp * xi;
  }
  CHECK((path.samples.col(4) - x).norm() <= 1e-14);
}

TEST_CASE("diverging states raise NumericalBlowup") {
  // Tabulated coefficients skip the stability gate, so growth is reachable.
  const SystemSpec spec = SystemSpec::tabulated({scalar(5.0)}, {scalar(1e-6)});
  RandomStream rs(1, 1);
  CHECK_THROWS_AS(
      (void)sample_path(spec, 0.01, 10, rs, Vector::Constant(1, 1.0)),
      NumericalBlowup);
}

TEST_CASE("stationary variance matches the Lyapunov value") {
  // Constant coefficients a = -1, q = 1 give Var x = q/|a| = 1.
  const SystemSpec spec = sinusoidal_system(scalar(-1.0), 0.0, scalar(1.0), 0.0);
  RandomStream rs(31, 4);
  const TimeSeries path =
      sample_path(spec, 0.002, 2000, rs, Vector::Zero(1), 4);
  const auto row = path.samples.row(0);
  const double mean = row.mean();
  const double var = (row.array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.1);
  CHECK(var == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("subsample keeps every stride-th sample") {
  TimeSeries ts;
  ts.dt = 0.1;
  ts.origin = 2.0;
  ts.samples.resize(1, 7);
  ts.samples << 0, 1, 2, 3, 4, 5, 6;
  const TimeSeries out = subsample(ts, 3);
  CHECK(out.count() == 3);
  CHECK(out.dt == doctest::Approx(0.3));
  CHECK(out.origin == doctest::Approx(2.0));
  CHECK(out.samples(0, 0) == 0.0);
  CHECK(out.samples(0, 1) == 3.0);
  CHECK(out.samples(0, 2) == 6.0);

  const TimeSeries same = subsample(ts, 1);
  CHECK(same.samples == ts.samples);
  CHECK_THROWS_AS((void)subsample(ts, 0), Error);
  CHECK_THROWS_AS((void)subsample(ts, 7), Error);
}
