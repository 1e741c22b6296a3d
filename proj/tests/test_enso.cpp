#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cslim/enso.hpp"
#include "cslim/simulate.hpp"

using namespace cslim;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& name, const std::string& content)
      : path("tmp_" + name + ".csv") {
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

MonthlySeries month_series(int start_year, int start_month,
                           std::vector<double> values) {
  MonthlySeries s;
  s.start_year = start_year;
  s.start_month = start_month;
  s.values = std::move(values);
  return s;
}

// Point-sampled monthly record of a known tabulated annual cycle.
MonthlySeries synthetic_monthly_record(const std::vector<Matrix>& dyn,
                                       const std::vector<Matrix>& diff,
                                       int years, std::uint64_t seed) {
  const SystemSpec spec = SystemSpec::tabulated(dyn, diff);
  RandomStream rs(seed, 0);
  const TimeSeries fine =
      sample_path(spec, 1.0 / 1200, years, rs, Vector::Zero(1), 5);
  MonthlySeries rec;
  rec.start_year = 1900;
  rec.start_month = 1;
  rec.values.resize(static_cast<std::size_t>(years) * 12);
  for (int i = 0; i < years * 12; ++i) {
    rec.values[i] = fine.samples(0, static_cast<long>(i) * 100);
  }
  return rec;
}

}  // namespace

TEST_CASE("load_monthly_index parses contiguous records") {
  const TempCsv csv("good",
                    "year,month,value\n"
                    "1997,11,0.5\n"
                    "1997,12,1.25\n"
                    "1998,1,-0.75\n");
  const MonthlySeries s = load_monthly_index(csv.path);
  CHECK(s.start_year == 1997);
  CHECK(s.start_month == 11);
  REQUIRE(s.size() == 3);
  CHECK(s.values[1] == doctest::Approx(1.25));
  CHECK(s.month_at(2) == 1);
  CHECK(s.year_at(2) == 1998);
}

TEST_CASE("load_monthly_index rejects malformed input") {
  const TempCsv bad_header("badheader", "anno,month,value\n1997,1,0.5\n");
  CHECK_THROWS_AS((void)load_monthly_index(bad_header.path), ParseError);

  const TempCsv gap("gap", "year,month,value\n1997,1,0.5\n1997,3,0.6\n");
  CHECK_THROWS_AS((void)load_monthly_index(gap.path), GapInRecord);

  const TempCsv dup("dup", "year,month,value\n1997,1,0.5\n1997,1,0.6\n");
  CHECK_THROWS_AS((void)load_monthly_index(dup.path), GapInRecord);

  const TempCsv month13("month13", "year,month,value\n1997,13,0.5\n");
  CHECK_THROWS_AS((void)load_monthly_index(month13.path), ParseError);

  const TempCsv text("text", "year,month,value\n1997,1,warm\n");
  CHECK_THROWS_AS((void)load_monthly_index(text.path), ParseError);

  const TempCsv empty("empty", "year,month,value\n");
  CHECK_THROWS_AS((void)load_monthly_index(empty.path), TooShort);

  CHECK_THROWS_AS((void)load_monthly_index("no_such_file.csv"), DataError);
}

TEST_CASE("compute_anomaly removes climatology and trend jointly") {
  const int n = 40 * 12;
  std::vector<double> clim = {3, 1, -2, 0.5, 4, -1, 2, 0, -3, 1.5, 2.5, -0.5};
  MonthlySeries raw = month_series(1950, 1, std::vector<double>(n));
  RandomStream rs(55, 0);
  for (int i = 0; i < n; ++i) {
    raw.values[i] = 20.0 + clim[raw.month_at(i) - 1] + 0.01 * i + 0.3 * rs.normal();
  }
  const MonthlySeries anom = compute_anomaly(raw);
  REQUIRE(anom.size() == n);
  CHECK(anom.start_year == 1950);

  // Zero mean for every calendar month.
  std::array<double, 12> sums{};
  std::array<int, 12> counts{};
  for (int i = 0; i < n; ++i) {
    sums[anom.month_at(i) - 1] += anom.values[i];
    ++counts[anom.month_at(i) - 1];
  }
  for (int m = 0; m < 12; ++m) CHECK(std::abs(sums[m] / counts[m]) < 1e-10);

  // Zero linear trend of the residual.
  const double mid = (n - 1) / 2.0;
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += anom.values[i] * (i - mid);
    den += (i - mid) * (i - mid);
  }
  CHECK(std::abs(num / den) < 1e-12);

  // Idempotent.
  const MonthlySeries twice = compute_anomaly(anom);
  for (int i = 0; i < n; ++i) {
    CHECK(twice.values[i] == doctest::Approx(anom.values[i]).epsilon(1e-10));
  }

  CHECK_THROWS_AS((void)compute_anomaly(month_series(2000, 1, std::vector<double>(23, 0.0))),
                  TooShort);
}

TEST_CASE("detect_eep keeps dominant peaks only") {
  // Indices:                 0    1    2     3    4    5    6     7    8
  const MonthlySeries s = month_series(
      2000, 11, {0.1, 2.5, 0.3, -2.9, 0.2, 0.0, 2.1, 2.1, 0.4});

  SUBCASE("absolute polarity scores the magnitude") {
    const auto peaks = detect_eep(s, 2.0, 2, PeakPolarity::absolute_value);
    // |2.5| at 1 and |-2.9| at 3 are 2 apart, so only the larger survives;
    // the 2.1 plateau at 6/7 resolves to the earlier month.
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].index == 3);
    CHECK(peaks[0].value == doctest::Approx(-2.9));
    CHECK(peaks[0].year == 2001);
    CHECK(peaks[0].month == 2);
    CHECK(peaks[1].index == 6);
    CHECK(peaks[1].month == 5);
  }

  SUBCASE("signed polarity ignores cold excursions") {
    const auto peaks = detect_eep(s, 2.0, 2, PeakPolarity::signed_max);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].index == 1);
    CHECK(peaks[1].index == 6);
  }

  SUBCASE("a wider window thins the peaks") {
    const auto peaks = detect_eep(s, 2.0, 6, PeakPolarity::absolute_value);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].index == 3);
  }

  SUBCASE("edge samples compare against existing neighbors only") {
    const MonthlySeries edge = month_series(2000, 1, {3.0, 0.1, 0.2});
    const auto peaks = detect_eep(edge, 2.0, 6, PeakPolarity::absolute_value);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].index == 0);
  }

  CHECK_THROWS_AS((void)detect_eep(s, 0.0, 2, PeakPolarity::absolute_value), Error);
  CHECK_THROWS_AS((void)detect_eep(s, 2.0, 0, PeakPolarity::absolute_value), Error);
}

TEST_CASE("fit_enso_models aligns the record to calendar years") {
  std::vector<Matrix> dyn, diff;
  for (int m = 0; m < 12; ++m) {
    dyn.push_back(Matrix::Constant(1, 1, -(1.0 + 0.5 * std::sin(2 * M_PI * m / 12.0))));
    diff.push_back(Matrix::Constant(1, 1, 1.0 + 0.4 * std::cos(2 * M_PI * m / 12.0)));
  }
  const MonthlySeries rec = synthetic_monthly_record(dyn, diff, 60, 321);

  // Dropping 6 months moves the anchor to July; alignment discards the rest of
  // that year, so the fit equals the one from the next-January record.
  MonthlySeries july = month_series(1900, 7, {rec.values.begin() + 6, rec.values.end()});
  MonthlySeries jan = month_series(1901, 1, {rec.values.begin() + 12, rec.values.end()});
  const EnsoFit f_july = fit_enso_models(july);
  const EnsoFit f_jan = fit_enso_models(jan);
  REQUIRE(f_july.e_model.phases() == 12);
  for (int j = 0; j < 12; ++j) {
    CHECK(f_july.e_model.dynamics[j](0, 0) ==
          doctest::Approx(f_jan.e_model.dynamics[j](0, 0)).epsilon(1e-12));
    CHECK(f_july.l_model.dynamics[j](0, 0) ==
          doctest::Approx(f_jan.l_model.dynamics[j](0, 0)).epsilon(1e-12));
  }
  CHECK(f_july.covariance.phases() == 12);
  CHECK(f_july.covariance_rate.phases() == 12);

  CHECK_THROWS_AS(
      (void)fit_enso_models(month_series(2000, 1, std::vector<double>(110, 0.1))),
      TooShort);
}

TEST_CASE("fitted monthly models track the generating coefficients") {
  std::vector<Matrix> dyn, diff;
  for (int m = 0; m < 12; ++m) {
    dyn.push_back(Matrix::Constant(1, 1, -(1.0 + 0.5 * std::sin(2 * M_PI * m / 12.0))));
    diff.push_back(Matrix::Constant(1, 1, 1.0 + 0.4 * std::cos(2 * M_PI * m / 12.0)));
  }
  const MonthlySeries rec = synthetic_monthly_record(dyn, diff, 500, 654);
  const EnsoFit fit = fit_enso_models(compute_anomaly(rec));

  CHECK(fit.e_model.flagged_count() == 0);
  double num = 0, den = 0;
  for (int j = 0; j < 12; ++j) {
    // e labels (2j+1)/24 sit mid-month; the truth holds each month constant.
    const int slot = static_cast<int>(fit.e_model.times[j] * 12.0);
    const double want = dyn[slot](0, 0);
    num += std::pow(fit.e_model.dynamics[j](0, 0) - want, 2);
    den += want * want;
  }
  CHECK(std::sqrt(num / den) < 0.3);
}

TEST_CASE("ensemble_regenerate reproduces stationary monthly statistics") {
  PeriodicModel model;
  model.estimator = "ecslim";
  model.intervals = 12;
  model.lag_steps = 1;
  model.dt = 1.0 / 12;
  for (int j = 0; j < 12; ++j) {
    model.times.push_back((2.0 * j + 1) / 24.0);
    model.dynamics.push_back(Matrix::Constant(1, 1, -1.0));
    model.diffusions.push_back(Matrix::Constant(1, 1, 1.0));
    model.flags.push_back(PhaseFlag::ok);
  }
  RandomStream stream(777, 9);
  const auto members = ensemble_regenerate(model, 30, 40, 1.0 / 360, stream);
  REQUIRE(members.size() == 40);
  for (const auto& m : members) {
    CHECK(m.size() == 360);
    CHECK(m.start_month == 1);
  }

  // Monthly means of an OU process with Var x = 1 contract toward
  // 2(T - 1 + exp(-T))/T^2 at window T = 1/12.
  const double T = 1.0 / 12;
  const double want = 2.0 * (T - 1.0 + std::exp(-T)) / (T * T);
  double acc = 0.0, acc2 = 0.0;
  long count = 0;
  for (const auto& m : members) {
    for (double v : m.values) {
      acc += v;
      acc2 += v * v;
      ++count;
    }
  }
  const double var = acc2 / count - std::pow(acc / count, 2);
  CHECK(var == doctest::Approx(want).epsilon(0.08));

  // Same stream, same ensemble.
  const auto again = ensemble_regenerate(model, 30, 40, 1.0 / 360, stream);
  for (int m = 0; m < 40; ++m) CHECK(again[m].values == members[m].values);

  PeriodicModel flagged = model;
  flagged.flags[3] = PhaseFlag::branch_cut;
  CHECK_THROWS_AS((void)ensemble_regenerate(flagged, 30, 2, 1.0 / 360, stream), Error);
  CHECK_THROWS_AS((void)ensemble_regenerate(model, 0, 2, 1.0 / 360, stream), Error);
  CHECK_THROWS_AS((void)ensemble_regenerate(model, 30, 0, 1.0 / 360, stream), Error);
  CHECK_THROWS_AS((void)ensemble_regenerate(model, 30, 2, 1.0 / 6, stream), Error);
  PeriodicModel short_model = model;
  short_model.times.pop_back();
  short_model.dynamics.pop_back();
  short_model.diffusions.pop_back();
  short_model.flags.pop_back();
  CHECK_THROWS_AS((void)ensemble_regenerate(short_model, 30, 2, 1.0 / 360, stream),
                  Error);
}

TEST_CASE("eep_monthly_stats aggregates member peak counts") {
  // Three two-year members with planted peaks.
  std::vector<MonthlySeries> members;
  for (int k = 0; k < 3; ++k) {
    MonthlySeries m = month_series(1, 1, std::vector<double>(24, 0.0));
    m.values[0] = 3.0;               // January, year 1
    if (k > 0) m.values[13] = -4.0;  // February, year 2
    if (k > 1) m.values[20] = 2.5;   // September, year 2: 7 months clear of
                                     // the February peak's dominance window
    members.push_back(std::move(m));
  }
  const EepMonthlyStats stats =
      eep_monthly_stats(members, 2.0, 6, PeakPolarity::absolute_value);

  REQUIRE(stats.member_totals.size() == 3);
  CHECK(stats.member_totals[0] == 1);
  CHECK(stats.member_totals[1] == 2);
  CHECK(stats.member_totals[2] == 3);
  CHECK(stats.total.p50 == doctest::Approx(2.0));
  CHECK(stats.total_mean == doctest::Approx(2.0));
  CHECK(stats.month_means[0] == doctest::Approx(1.0));        // January in all
  CHECK(stats.month_means[1] == doctest::Approx(2.0 / 3));    // February in two
  CHECK(stats.month_means[8] == doctest::Approx(1.0 / 3));    // September in one
  CHECK(stats.per_month[0].p50 == doctest::Approx(1.0));
  // September counts {0, 0, 1}: type-7 p95 interpolates to 0.9.
  CHECK(stats.per_month[8].p95 == doctest::Approx(0.9));

  // Per-member consistency: monthly counts sum to the member total.
  for (int k = 0; k < 3; ++k) {
    const auto peaks = detect_eep(members[k], 2.0, 6, PeakPolarity::absolute_value);
    CHECK(static_cast<long>(peaks.size()) == stats.member_totals[k]);
  }
  CHECK_THROWS_AS((void)eep_monthly_stats({}, 2.0, 6, PeakPolarity::absolute_value),
                  Error);
}
