#include "cslim/enso.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cslim/estimate.hpp"
#include "cslim/postproc.hpp"
#include "cslim/simulate.hpp"

namespace cslim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

MonthlySeries load_monthly_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_monthly_index: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("load_monthly_index: empty file " + path);
  }
  {
    const auto header = split_csv(line);
    if (header.size() != 3 || header[0] != "year" || header[1] != "month" ||
        header[2] != "value") {
      throw ParseError("load_monthly_index: expected header year,month,value");
    }
  }

  MonthlySeries series;
  long row = 1;
  int prev_year = 0, prev_month = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) {
      std::ostringstream os;
      os << "load_monthly_index: row " << row << " has " << fields.size()
         << " fields, expected 3";
      throw ParseError(os.str());
    }
    int year, month;
    double value;
    try {
      std::size_t used = 0;
      year = std::stoi(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument(fields[0]);
      month = std::stoi(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument(fields[1]);
      value = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument(fields[2]);
    } catch (const std::exception&) {
      std::ostringstream os;
      os << "load_monthly_index: row " << row << " is not year,month,value";
      throw ParseError(os.str());
    }
    if (month < 1 || month > 12) {
      std::ostringstream os;
      os << "load_monthly_index: row " << row << " has month " << month;
      throw ParseError(os.str());
    }
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "load_monthly_index: row " << row << " has non-finite value";
      throw ParseError(os.str());
    }
    if (series.values.empty()) {
      series.start_year = year;
      series.start_month = month;
    } else {
      const int expect_month = prev_month == 12 ? 1 : prev_month + 1;
      const int expect_year = prev_month == 12 ? prev_year + 1 : prev_year;
      if (year != expect_year || month != expect_month) {
        std::ostringstream os;
        os << "load_monthly_index: row " << row << " jumps from " << prev_year
           << "-" << prev_month << " to " << year << "-" << month;
        throw GapInRecord(os.str());
      }
    }
    prev_year = year;
    prev_month = month;
    series.values.push_back(value);
  }
  if (series.values.empty()) {
    throw TooShort("load_monthly_index: no data rows in " + path);
  }
  return series;
}

MonthlySeries compute_anomaly(const MonthlySeries& series) {
  const long n = series.size();
  if (n < 24) {
    std::ostringstream os;
    os << "compute_anomaly: need at least 24 months, got " << n;
    throw TooShort(os.str());
  }
  // Joint least squares of a 12-level climatology and a centered linear trend.
  // Fitting them together (rather than one after the other) leaves a residual
  // orthogonal to both, so every calendar month averages to zero and the
  // trend coefficient of the residual vanishes.
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, 13);
  Eigen::VectorXd y(n);
  const double mid = static_cast<double>(n - 1) / 2.0;
  for (long i = 0; i < n; ++i) {
    design(i, series.month_at(i) - 1) = 1.0;
    design(i, 12) = static_cast<double>(i) - mid;
    y[i] = series.values[i];
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd residual = y - design * beta;

  MonthlySeries out;
  out.start_year = series.start_year;
  out.start_month = series.start_month;
  out.values.assign(residual.data(), residual.data() + n);
  return out;
}

std::vector<EepRecord> detect_eep(const MonthlySeries& series, double threshold,
                                  int window, PeakPolarity polarity) {
  if (!(threshold > 0.0)) throw Error("detect_eep: threshold must be positive");
  if (window < 1) throw Error("detect_eep: window must be at least one month");
  const long n = series.size();
  std::vector<EepRecord> peaks;
  for (long i = 0; i < n; ++i) {
    const double score_i = polarity == PeakPolarity::absolute_value
                               ? std::abs(series.values[i])
                               : series.values[i];
    if (score_i < threshold) continue;
    bool dominant = true;
    const long lo = std::max<long>(0, i - window);
    const long hi = std::min<long>(n - 1, i + window);
    for (long j = lo; j <= hi && dominant; ++j) {
      if (j == i) continue;
      const double score_j = polarity == PeakPolarity::absolute_value
                                 ? std::abs(series.values[j])
                                 : series.values[j];
      // Ties go to the earlier month so a plateau yields one peak.
      if (score_j > score_i || (score_j == score_i && j < i)) dominant = false;
    }
    if (dominant) {
      peaks.push_back(EepRecord{i, series.year_at(i), series.month_at(i),
                                series.values[i]});
    }
  }
  return peaks;
}

EnsoFit fit_enso_models(const MonthlySeries& anomaly) {
  const long shift = (13 - anomaly.start_month) % 12;
  const long n = anomaly.size() - shift;
  if (n < 120) {
    std::ostringstream os;
    os << "fit_enso_models: need at least 10 complete years from January, got "
       << (n > 0 ? n : 0) << " months";
    throw TooShort(os.str());
  }

  TimeSeries ts;
  ts.dt = 1.0 / 12.0;
  ts.origin = 0.0;
  ts.samples.resize(1, n);
  for (long i = 0; i < n; ++i) ts.samples(0, i) = anomaly.values[shift + i];

  EnsoFit fit;
  fit.e_model = cs_lim(ts, 12, 12, 1, CsVariant::e);
  fit.l_model = l_cs_lim(ts, 12);
  fit.covariance = covariance_series(ts, 12);
  fit.covariance_rate = periodic_diff(fit.covariance, DiffScheme::forward);
  return fit;
}

std::vector<MonthlySeries> ensemble_regenerate(const PeriodicModel& model,
                                               int years, int members,
                                               double dt_years,
                                               const RandomStream& stream) {
  if (years < 1) throw Error("ensemble_regenerate: need at least one year");
  if (members < 1) throw Error("ensemble_regenerate: need at least one member");
  if (model.phases() != 12) {
    throw Error("ensemble_regenerate: model must carry 12 monthly phases");
  }
  const Eigen::Index dim = model.dim();

  // Phase labels map onto calendar months by the cell they fall in; the
  // coefficients are held constant over each month (zero-order hold).
  std::vector<Matrix> dyn(12), diff(12);
  std::vector<bool> filled(12, false);
  for (int j = 0; j < 12; ++j) {
    if (model.flags[j] != PhaseFlag::ok) {
      std::ostringstream os;
      os << "ensemble_regenerate: phase " << j << " is flagged ("
         << to_string(model.flags[j]) << ")";
      throw Error(os.str());
    }
    const int slot = static_cast<int>(std::floor(model.times[j] * 12.0 + 1e-9));
    if (slot < 0 || slot >= 12 || filled[slot]) {
      throw Error("ensemble_regenerate: phase labels do not cover the 12 months");
    }
    filled[slot] = true;
    dyn[slot] = model.dynamics[j];
    diff[slot] = nearest_psd(model.diffusions[j], 1e-8);
  }

  const SystemSpec spec = SystemSpec::tabulated(std::move(dyn), std::move(diff));
  const long steps = std::lround(1.0 / dt_years);
  if (steps < 12 || std::abs(static_cast<double>(steps) * dt_years - 1.0) > 1e-9) {
    throw Error("ensemble_regenerate: dt must divide the year into at least 12 steps");
  }

  std::vector<MonthlySeries> out;
  out.reserve(members);
  const Vector x0 = Vector::Zero(dim);
  for (int m = 0; m < members; ++m) {
    RandomStream child = stream.derive(static_cast<std::uint64_t>(m));
    const TimeSeries path = sample_path(spec, dt_years, years, child, x0, 0);

    MonthlySeries series;
    series.start_year = 1;
    series.start_month = 1;
    series.values.assign(static_cast<std::size_t>(years) * 12, 0.0);
    std::vector<long> counts(series.values.size(), 0);
    // Sample i sits in month 12*i/steps of the run; the final sample starts
    // the year after the record and is dropped.
    for (long i = 0; i < static_cast<long>(years) * steps; ++i) {
      const long month = (12 * i) / steps;
      series.values[month] += path.samples(0, i);
      ++counts[month];
    }
    for (std::size_t k = 0; k < series.values.size(); ++k) {
      series.values[k] /= static_cast<double>(counts[k]);
    }
    out.push_back(std::move(series));
  }
  return out;
}

namespace {

QuantileSummary summarize(std::vector<double> sample) {
  QuantileSummary q;
  q.p5 = quantile(sample, 0.05);
  q.p25 = quantile(sample, 0.25);
  q.p50 = quantile(sample, 0.50);
  q.p75 = quantile(sample, 0.75);
  q.p95 = quantile(sample, 0.95);
  return q;
}

}  // namespace

EepMonthlyStats eep_monthly_stats(const std::vector<MonthlySeries>& members,
                                  double threshold, int window,
                                  PeakPolarity polarity) {
  if (members.empty()) throw Error("eep_monthly_stats: no ensemble members");
  std::array<std::vector<double>, 12> month_counts;
  for (auto& v : month_counts) v.reserve(members.size());
  std::vector<double> totals;
  totals.reserve(members.size());

  EepMonthlyStats stats;
  for (const MonthlySeries& member : members) {
    const auto peaks = detect_eep(member, threshold, window, polarity);
    std::array<long, 12> by_month{};
    for (const EepRecord& peak : peaks) ++by_month[peak.month - 1];
    for (int m = 0; m < 12; ++m) {
      month_counts[m].push_back(static_cast<double>(by_month[m]));
    }
    totals.push_back(static_cast<double>(peaks.size()));
    stats.member_totals.push_back(static_cast<long>(peaks.size()));
  }
  for (int m = 0; m < 12; ++m) {
    stats.per_month[m] = summarize(month_counts[m]);
    double sum = 0.0;
    for (double c : month_counts[m]) sum += c;
    stats.month_means[m] = sum / static_cast<double>(members.size());
  }
  stats.total = summarize(totals);
  double total_sum = 0.0;
  for (double c : totals) total_sum += c;
  stats.total_mean = total_sum / static_cast<double>(members.size());
  return stats;
}

}  // namespace cslim
