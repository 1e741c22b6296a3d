#include "cslim/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cslim {

std::string to_string(PhaseFlag flag) {
  switch (flag) {
    case PhaseFlag::ok: return "ok";
    case PhaseFlag::branch_cut: return "branch_cut";
    case PhaseFlag::singular_covariance: return "singular_covariance";
    case PhaseFlag::numerical: return "numerical";
  }
  return "numerical";
}

PhaseFlag phase_flag_from_string(const std::string& s) {
  if (s == "ok") return PhaseFlag::ok;
  if (s == "branch_cut") return PhaseFlag::branch_cut;
  if (s == "singular_covariance") return PhaseFlag::singular_covariance;
  if (s == "numerical") return PhaseFlag::numerical;
  throw ParseError("unknown phase flag: " + s);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  return out;
}

// JSON has no NaN literal; flagged phases round-trip their entries as null.
nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ParseError("model JSON: expected a number");
  return j.get<double>();
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(json_number(m(i, j)));
  }
  return arr;
}

Matrix matrix_from_json(const nlohmann::json& arr, Eigen::Index n) {
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(n * n)) {
    throw ParseError("model JSON: matrix entry count does not match dimension");
  }
  Matrix m(n, n);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = number_from_json(arr[k++]);
  }
  return m;
}

}  // namespace

void write_timeseries_csv(const TimeSeries& series, const std::string& path) {
  series.validate();
  auto out = open_out(path);
  out << "t";
  for (Eigen::Index i = 0; i < series.dim(); ++i) out << ",x" << i + 1;
  out << "\n";
  for (Eigen::Index m = 0; m < series.count(); ++m) {
    out << format_double(series.time_at(m));
    for (Eigen::Index i = 0; i < series.dim(); ++i) {
      out << "," << format_double(series.samples(i, m));
    }
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

TimeSeries read_timeseries_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty time series file " + path);

  std::vector<std::vector<double>> rows;
  std::vector<double> times;
  long rowno = 1;
  while (std::getline(in, line)) {
    ++rowno;
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        fields.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        std::ostringstream os;
        os << "time series row " << rowno << ": bad number '" << tok << "'";
        throw ParseError(os.str());
      }
    }
    if (fields.size() < 2) {
      std::ostringstream os;
      os << "time series row " << rowno << ": need t plus at least one component";
      throw ParseError(os.str());
    }
    if (!rows.empty() && fields.size() - 1 != rows.front().size()) {
      std::ostringstream os;
      os << "time series row " << rowno << ": inconsistent component count";
      throw ParseError(os.str());
    }
    times.push_back(fields[0]);
    rows.emplace_back(fields.begin() + 1, fields.end());
  }
  if (rows.size() < 2) throw ParseError("time series has fewer than two samples");

  TimeSeries series;
  series.origin = times.front();
  series.dt = times[1] - times[0];
  if (!(series.dt > 0.0)) throw ParseError("time series times must ascend");
  for (std::size_t m = 1; m < times.size(); ++m) {
    if (std::abs(times[m] - times[m - 1] - series.dt) > 1e-9) {
      std::ostringstream os;
      os << "time series row " << m + 2 << ": nonuniform time step";
      throw ParseError(os.str());
    }
  }
  series.samples.resize(rows.front().size(), rows.size());
  for (std::size_t m = 0; m < rows.size(); ++m) {
    for (std::size_t i = 0; i < rows[m].size(); ++i) {
      series.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) =
          rows[m][i];
    }
  }
  series.validate();
  return series;
}

void write_correlation_csv(const CorrelationField& field, const std::string& path) {
  auto out = open_out(path);
  out << "lag,phase,i,j,value,count\n";
  for (int s = 0; s <= field.max_lag; ++s) {
    for (int t = 0; t < field.period; ++t) {
      const Matrix& cell = field.at(s, t);
      for (Eigen::Index i = 0; i < cell.rows(); ++i) {
        for (Eigen::Index j = 0; j < cell.cols(); ++j) {
          out << s << "," << t << "," << i + 1 << "," << j + 1 << ","
              << format_double(cell(i, j)) << "," << field.count_at(s, t) << "\n";
        }
      }
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

nlohmann::json model_to_json(const PeriodicModel& model) {
  nlohmann::json doc;
  doc["estimator"] = model.estimator;
  doc["dim"] = model.dim();
  doc["hyper"] = {{"M", model.intervals}, {"k", model.lag_steps}, {"dt", model.dt}};
  nlohmann::json phases = nlohmann::json::array();
  for (int j = 0; j < model.phases(); ++j) {
    phases.push_back({{"t", model.times[j]},
                      {"A", matrix_to_json(model.dynamics[j])},
                      {"Q", matrix_to_json(model.diffusions[j])},
                      {"flags", to_string(model.flags[j])}});
  }
  doc["phases"] = std::move(phases);
  return doc;
}

PeriodicModel model_from_json(const nlohmann::json& doc) {
  PeriodicModel model;
  try {
    model.estimator = doc.at("estimator").get<std::string>();
    const auto n = doc.at("dim").get<Eigen::Index>();
    const auto& hyper = doc.at("hyper");
    model.intervals = hyper.at("M").get<int>();
    model.lag_steps = hyper.at("k").get<int>();
    model.dt = hyper.at("dt").get<double>();
    for (const auto& phase : doc.at("phases")) {
      model.times.push_back(phase.at("t").get<double>());
      model.dynamics.push_back(matrix_from_json(phase.at("A"), n));
      model.diffusions.push_back(matrix_from_json(phase.at("Q"), n));
      model.flags.push_back(phase_flag_from_string(phase.at("flags").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(std::string("model JSON: ") + err.what());
  }
  if (model.times.empty()) throw ParseError("model JSON: no phases");
  return model;
}

void write_model_json(const PeriodicModel& model, const std::string& path) {
  write_json_file(model_to_json(model), path);
}

PeriodicModel read_model_json(const std::string& path) {
  return model_from_json(read_json_file(path));
}

void write_model_csv(const PeriodicModel& model, const std::string& path) {
  auto out = open_out(path);
  out << "t,i,j,A_ij,Q_ij\n";
  for (int p = 0; p < model.phases(); ++p) {
    for (Eigen::Index i = 0; i < model.dim(); ++i) {
      for (Eigen::Index j = 0; j < model.dim(); ++j) {
        out << format_double(model.times[p]) << "," << i + 1 << "," << j + 1 << ","
            << format_double(model.dynamics[p](i, j)) << ","
            << format_double(model.diffusions[p](i, j)) << "\n";
      }
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_monthly_csv(const MonthlySeries& series, const std::string& path) {
  auto out = open_out(path);
  out << "year,month,value\n";
  for (long i = 0; i < series.size(); ++i) {
    out << series.year_at(i) << "," << series.month_at(i) << ","
        << format_double(series.values[i]) << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_json_file(const nlohmann::json& doc, const std::string& path) {
  auto out = open_out(path);
  out << doc.dump(2) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(path + ": " + err.what());
  }
}

}  // namespace cslim
