#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "cslim/enso.hpp"
#include "cslim/types.hpp"

namespace cslim {

// TimeSeries CSV: header `t,x1,...,xn`, one row per sample, 17 significant
// digits (round-trip exact for doubles).
void write_timeseries_csv(const TimeSeries& series, const std::string& path);
TimeSeries read_timeseries_csv(const std::string& path);

// CorrelationField CSV: header `lag,phase,i,j,value,count`.
void write_correlation_csv(const CorrelationField& field, const std::string& path);

// PeriodicModel JSON document and flat CSV (`t,i,j,A_ij,Q_ij`).
nlohmann::json model_to_json(const PeriodicModel& model);
PeriodicModel model_from_json(const nlohmann::json& doc);
void write_model_json(const PeriodicModel& model, const std::string& path);
PeriodicModel read_model_json(const std::string& path);
void write_model_csv(const PeriodicModel& model, const std::string& path);

// Monthly series CSV in the `year,month,value` schema.
void write_monthly_csv(const MonthlySeries& series, const std::string& path);

void write_json_file(const nlohmann::json& doc, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

std::string format_double(double v);  // 17 significant digits

}  // namespace cslim
