#pragma once

#include <array>
#include <string>
#include <vector>

#include "cslim/models.hpp"
#include "cslim/random.hpp"
#include "cslim/types.hpp"

namespace cslim {

// Contiguous monthly scalar record anchored at (start_year, start_month).
struct MonthlySeries {
  int start_year = 0;
  int start_month = 1;  // 1..12
  std::vector<double> values;

  long size() const { return static_cast<long>(values.size()); }
  int month_at(long i) const {
    return static_cast<int>((start_month - 1 + i) % 12) + 1;
  }
  int year_at(long i) const {
    return start_year + static_cast<int>((start_month - 1 + i) / 12);
  }
};

// Reads a `year,month,value` CSV.  Rows must advance by exactly one month;
// gaps or duplicates raise GapInRecord with the offending row.
MonthlySeries load_monthly_index(const std::string& path);

// Removes the joint least-squares fit of a monthly climatology and a linear
// trend.  The residual has zero mean for every calendar month and zero linear
// trend; the operation is idempotent.
MonthlySeries compute_anomaly(const MonthlySeries& series);

enum class PeakPolarity { absolute_value, signed_max };

struct EepRecord {
  long index = 0;
  int year = 0;
  int month = 0;     // calendar month 1..12
  double value = 0.0;
};

// Extreme event peaks: samples at or above threshold in score that are strict
// maxima of the score over a +-window month neighborhood (ties broken toward
// the earlier month; edges compare only existing neighbors).  The score is
// |x| for absolute_value polarity and x itself for signed_max.
std::vector<EepRecord> detect_eep(const MonthlySeries& series, double threshold,
                                  int window, PeakPolarity polarity);

struct EnsoFit {
  PeriodicModel e_model;
  PeriodicModel l_model;
  PeriodicMatrixSeries covariance;        // C(t) on the 12-phase grid
  PeriodicMatrixSeries covariance_rate;   // forward-difference dC/dt
};

// Fits the subdivided (e variant, 12 intervals, lag 1) and local periodic
// models to a monthly anomaly record, treating the calendar year as the
// period.  The record is first aligned to start in January; at least 10
// complete years must remain.
EnsoFit fit_enso_models(const MonthlySeries& anomaly);

// Simulates `members` independent paths of the fitted model over `years`
// periods at step dt_years, returning monthly means.  Diffusion phases are
// projected to PSD before sampling; member m draws from stream.derive(m).
std::vector<MonthlySeries> ensemble_regenerate(const PeriodicModel& model,
                                               int years, int members,
                                               double dt_years,
                                               const RandomStream& stream);

struct QuantileSummary {
  double p5 = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0;
};

struct EepMonthlyStats {
  std::array<QuantileSummary, 12> per_month;  // peak counts keyed by calendar month
  std::array<double, 12> month_means{};
  QuantileSummary total;
  double total_mean = 0.0;
  std::vector<long> member_totals;
};

// Distribution of peak counts across ensemble members, per calendar month and
// in total.
EepMonthlyStats eep_monthly_stats(const std::vector<MonthlySeries>& members,
                                  double threshold, int window,
                                  PeakPolarity polarity);

}  // namespace cslim
