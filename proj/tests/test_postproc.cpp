#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cslim/postproc.hpp"

using namespace cslim;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

PeriodicMatrixSeries scalar_series(const std::vector<double>& xs,
                                   double offset = 0.0) {
  PeriodicMatrixSeries s;
  const int p = static_cast<int>(xs.size());
  s.times.resize(p);
  s.values.resize(p);
  for (int j = 0; j < p; ++j) {
    s.times[j] = (j + offset) / p;
    s.values[j] = scalar(xs[j]);
  }
  return s;
}

double series_mean(const PeriodicMatrixSeries& s) {
  double acc = 0.0;
  for (const Matrix& v : s.values) acc += v(0, 0);
  return acc / static_cast<double>(s.phases());
}

}  // namespace

TEST_CASE("moving_average window semantics") {
  const PeriodicMatrixSeries s = scalar_series({1, 2, 3, 4, 5});
  const PeriodicMatrixSeries id = moving_average(s, 1);
  for (int j = 0; j < 5; ++j) CHECK(id.values[j](0, 0) == s.values[j](0, 0));

  const PeriodicMatrixSeries w3 = moving_average(s, 3);
  // Circular: phase 0 averages {5, 1, 2}.
  CHECK(w3.values[0](0, 0) == doctest::Approx(8.0 / 3));
  CHECK(w3.values[2](0, 0) == doctest::Approx(3.0));
  CHECK(w3.values[4](0, 0) == doctest::Approx(10.0 / 3));
  CHECK(series_mean(w3) == doctest::Approx(series_mean(s)).epsilon(1e-12));

  const PeriodicMatrixSeries w5 = moving_average(s, 5);
  for (int j = 0; j < 5; ++j) CHECK(w5.values[j](0, 0) == doctest::Approx(3.0));

  CHECK_THROWS_AS((void)moving_average(s, 2), BadWindow);
  CHECK_THROWS_AS((void)moving_average(s, 7), BadWindow);
  CHECK_THROWS_AS((void)moving_average(s, -1), BadWindow);

  PeriodicMatrixSeries skew = s;
  skew.times = {0.0, 0.1, 0.2, 0.3, 0.9};
  CHECK_THROWS_AS((void)moving_average(skew, 3), GridMismatch);
}

TEST_CASE("lowpass keeps or kills whole Fourier modes") {
  const int p = 16;
  std::vector<double> xs(p);
  for (int j = 0; j < p; ++j) {
    const double t = static_cast<double>(j) / p;
    xs[j] = 2.0 + std::sin(2 * M_PI * t) + 0.5 * std::cos(2 * M_PI * 3 * t);
  }
  const PeriodicMatrixSeries s = scalar_series(xs);

  // Cutoff p/2 passes everything.
  const PeriodicMatrixSeries all = lowpass(s, p / 2);
  for (int j = 0; j < p; ++j) {
    CHECK(all.values[j](0, 0) == doctest::Approx(xs[j]).epsilon(1e-10));
  }
  // Cutoff 0 keeps only the mean.
  const PeriodicMatrixSeries dc = lowpass(s, 0);
  for (int j = 0; j < p; ++j) {
    CHECK(dc.values[j](0, 0) == doctest::Approx(2.0).epsilon(1e-10));
  }
  // Cutoff 1 strips the third harmonic and keeps the first exactly.
  const PeriodicMatrixSeries one = lowpass(s, 1);
  for (int j = 0; j < p; ++j) {
    const double t = static_cast<double>(j) / p;
    CHECK(one.values[j](0, 0) ==
          doctest::Approx(2.0 + std::sin(2 * M_PI * t)).epsilon(1e-10));
  }
  CHECK_THROWS_AS((void)lowpass(s, -1), BadCutoff);
}

TEST_CASE("gaussian_smooth is a normalized circular kernel") {
  const PeriodicMatrixSeries s = scalar_series({3, 1, 4, 1, 5, 9, 2, 6});
  const PeriodicMatrixSeries wide = gaussian_smooth(s, 2.0);
  CHECK(series_mean(wide) == doctest::Approx(series_mean(s)).epsilon(1e-12));
  // A vanishing bandwidth reduces to the identity.
  const PeriodicMatrixSeries tight = gaussian_smooth(s, 0.05);
  for (int j = 0; j < 8; ++j) {
    CHECK(tight.values[j](0, 0) == doctest::Approx(s.values[j](0, 0)).epsilon(1e-12));
  }
  // Huge bandwidth flattens to the mean.
  const PeriodicMatrixSeries flat = gaussian_smooth(s, 1000.0);
  for (int j = 0; j < 8; ++j) {
    CHECK(flat.values[j](0, 0) == doctest::Approx(series_mean(s)).epsilon(1e-6));
  }
  CHECK_THROWS_AS((void)gaussian_smooth(s, 0.0), BadWindow);
}

TEST_CASE("sine_fit recovers modulation parameters exactly") {
  auto sample = [](double mean, double intensity, double phase) {
    std::vector<double> values, times;
    for (int j = 0; j < 12; ++j) {
      const double t = static_cast<double>(j) / 12;
      times.push_back(t);
      values.push_back(mean * (1 + intensity * M_PI * std::sin(2 * M_PI * (t + phase))));
    }
    return std::pair{values, times};
  };

  auto [va, ta] = sample(-1.0, 0.2, 0.05);
  const FitResult a = sine_fit(va, ta);
  CHECK(a.mean == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(a.intensity == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(a.phase == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(a.residual < 1e-10);
  CHECK_FALSE(a.degenerate_mean);

  auto [vq, tq] = sample(1.0, 0.3, -0.03);
  const FitResult q = sine_fit(vq, tq);
  CHECK(q.mean == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(q.intensity == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(q.phase == doctest::Approx(-0.03).epsilon(1e-10));

  // Phases are canonical in [-0.5, 0.5).
  auto [vw, tw] = sample(1.0, 0.1, 0.6);
  CHECK(sine_fit(vw, tw).phase == doctest::Approx(-0.4).epsilon(1e-10));

  const FitResult flat = sine_fit({2, 2, 2}, {0.1, 0.4, 0.7});
  CHECK(flat.mean == doctest::Approx(2.0));
  CHECK(flat.intensity == doctest::Approx(0.0));
  CHECK(flat.phase == doctest::Approx(0.0));

  std::vector<double> pure_sin, times;
  for (int j = 0; j < 8; ++j) {
    times.push_back(j / 8.0);
    pure_sin.push_back(std::sin(2 * M_PI * j / 8.0));
  }
  CHECK(sine_fit(pure_sin, times).degenerate_mean);

  CHECK_THROWS_AS((void)sine_fit({1, 2}, {0.0, 0.5}), Error);
  CHECK_THROWS_AS((void)sine_fit({1, 2, 3}, {0.0, 0.5}), Error);
  const double nan = std::nan("");
  CHECK_THROWS_AS((void)sine_fit({1, nan, 3}, {0.0, 0.3, 0.6}), Error);
}

TEST_CASE("relative errors against constants and curves") {
  CHECK(relative_error_const(scalar(1.1), scalar(1.0)) ==
        doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS((void)relative_error_const(scalar(1.0), scalar(0.0)), ZeroTruth);

  const int p = 100;
  PeriodicModel constant;
  constant.times.resize(p);
  constant.dynamics.resize(p);
  constant.diffusions.resize(p);
  constant.flags.assign(p, PhaseFlag::ok);
  for (int j = 0; j < p; ++j) {
    constant.times[j] = static_cast<double>(j) / p;
    constant.dynamics[j] = scalar(-1.0);
    constant.diffusions[j] = scalar(1.0);
  }
  auto truth_a = [](double t) {
    return scalar(-(1 + 0.2 * M_PI * std::sin(2 * M_PI * t)));
  };
  // Best-constant error floor: uniform grid sums of sin and sin^2 are exact,
  // so the measured value equals (b/sqrt 2)/sqrt(1 + b^2/2) with b = 0.2 pi.
  const double b = 0.2 * M_PI;
  const double floor = (b / std::sqrt(2.0)) / std::sqrt(1.0 + b * b / 2.0);
  const double got = relative_error_series(view(constant, ModelField::dynamics), truth_a);
  CHECK(got == doctest::Approx(floor).epsilon(1e-12));
  // The commonly quoted rounding of this constant.
  CHECK(floor == doctest::Approx(0.406).epsilon(1e-3));

  // Flagged phases drop out of both sums.
  PeriodicModel half = constant;
  for (int j = 0; j < p; j += 2) half.flags[j] = PhaseFlag::numerical;
  CHECK(relative_error_series(view(half, ModelField::dynamics), truth_a) ==
        doctest::Approx(floor).epsilon(0.02));
  PeriodicModel dead = constant;
  dead.flags.assign(p, PhaseFlag::branch_cut);
  CHECK_THROWS_AS(
      (void)relative_error_series(view(dead, ModelField::dynamics), truth_a),
      AllPhasesFlagged);
}

TEST_CASE("relative_difference interpolates the finer curve") {
  auto sine_model = [](int p, double offset) {
    PeriodicModel m;
    m.times.resize(p);
    m.dynamics.resize(p);
    m.diffusions.resize(p);
    m.flags.assign(p, PhaseFlag::ok);
    for (int j = 0; j < p; ++j) {
      m.times[j] = (j + offset) / p;
      m.dynamics[j] = scalar(1.0 + std::sin(2 * M_PI * m.times[j]));
      m.diffusions[j] = scalar(1.0);
    }
    return m;
  };
  // Same analytic curve on 200 vs 100 phases: only resampling error remains.
  const PeriodicModel fine = sine_model(200, 0.5);
  const PeriodicModel coarse = sine_model(100, 0.5);
  const double d = relative_difference(view(fine, ModelField::dynamics),
                                       view(coarse, ModelField::dynamics));
  CHECK(d < 1e-3);
  CHECK(relative_difference(view(coarse, ModelField::dynamics),
                            view(coarse, ModelField::dynamics)) == doctest::Approx(0.0));

  // b supplies the reference scale.
  PeriodicModel two = sine_model(4, 0.0), one = sine_model(4, 0.0);
  for (int j = 0; j < 4; ++j) {
    two.dynamics[j] = scalar(2.0);
    one.dynamics[j] = scalar(1.0);
  }
  CHECK(relative_difference(view(two, ModelField::dynamics),
                            view(one, ModelField::dynamics)) == doctest::Approx(1.0));
  CHECK(relative_difference(view(one, ModelField::dynamics),
                            view(two, ModelField::dynamics)) == doctest::Approx(0.5));

  PeriodicModel dead = sine_model(8, 0.0);
  dead.flags.assign(8, PhaseFlag::numerical);
  CHECK_THROWS_AS((void)relative_difference(view(dead, ModelField::dynamics),
                                            view(coarse, ModelField::dynamics)),
                  EmptyOverlap);
}

TEST_CASE("interval_average reduces blocks to their centers") {
  const PeriodicMatrixSeries s = scalar_series({1, 3, 5, 7, 9, 11});
  const PeriodicMatrixSeries avg = interval_average(s, 3);
  REQUIRE(avg.phases() == 3);
  CHECK(avg.values[0](0, 0) == doctest::Approx(2.0));
  CHECK(avg.values[1](0, 0) == doctest::Approx(6.0));
  CHECK(avg.values[2](0, 0) == doctest::Approx(10.0));
  CHECK(avg.times[0] == doctest::Approx(1.0 / 6));
  CHECK(avg.times[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS((void)interval_average(s, 4), IndivisibleInterval);

  PeriodicModel model;
  model.estimator = "lcslim";
  model.intervals = 4;
  model.lag_steps = 1;
  model.dt = 0.25;
  model.times = {0.125, 0.375, 0.625, 0.875};
  model.dynamics = {scalar(1.0), scalar(3.0), scalar(5.0), scalar(7.0)};
  model.diffusions = model.dynamics;
  model.flags = {PhaseFlag::ok, PhaseFlag::branch_cut, PhaseFlag::numerical,
                 PhaseFlag::numerical};
  const PeriodicModel avg_m = interval_average(model, 2);
  REQUIRE(avg_m.phases() == 2);
  // First block keeps only its unflagged member; second has none left.
  CHECK(avg_m.flags[0] == PhaseFlag::ok);
  CHECK(avg_m.dynamics[0](0, 0) == doctest::Approx(1.0));
  CHECK(avg_m.flags[1] != PhaseFlag::ok);
  CHECK(std::isnan(avg_m.dynamics[1](0, 0)));
  CHECK(avg_m.estimator == "lcslim");
}

TEST_CASE("component extracts one matrix entry along the curve") {
  PeriodicMatrixSeries s;
  s.times = {0.25, 0.75};
  Matrix m0(2, 2), m1(2, 2);
  m0 << 1, 2, 3, 4;
  m1 << 5, 6, 7, 8;
  s.values = {m0, m1};
  const std::vector<double> entries = component(view(s), 1, 0);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0] == doctest::Approx(3.0));
  CHECK(entries[1] == doctest::Approx(7.0));
}

TEST_CASE("quantile follows the linear-interpolation convention") {
  CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({4, 1, 3, 2}, 0.95) == doctest::Approx(3.85));
  CHECK(quantile({4, 1, 3, 2}, 0.0) == doctest::Approx(1.0));
  CHECK(quantile({4, 1, 3, 2}, 1.0) == doctest::Approx(4.0));
  CHECK(quantile({7.0}, 0.31) == doctest::Approx(7.0));
  CHECK_THROWS_AS((void)quantile({}, 0.5), Error);
  CHECK_THROWS_AS((void)quantile({1.0}, 1.5), Error);
}
