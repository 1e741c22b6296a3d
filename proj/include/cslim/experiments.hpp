#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cslim/types.hpp"

namespace cslim {

// Smoothing settings for the local model's postprocessed variants.  Zero means
// derive from the grid: window = nearest odd to period/intervals, sigma =
// period / (2 pi intervals).
struct FilterParams {
  int ma_window = 0;
  int lp_cutoff = 4;
  double gw_sigma = 0.0;
};

struct ExperimentConfig {
  std::string experiment = "oned";  // oned | nd | convergence | enso

  // Shared simulation protocol.
  double sim_dt = 0.002;
  int stride = 5;
  std::vector<long> tf_list = {100, 1000};
  int trials = 128;
  long burn_in_periods = 0;
  std::uint64_t master_seed = 12345;
  int threads = 0;            // 0 = hardware concurrency
  double failure_budget = 0.5;

  // Estimator hyperparameters.
  int intervals = 10;  // M
  int lag_steps = 10;  // k
  FilterParams filters;

  // One-dimensional reference system.
  double mean_dynamics = -1.0;
  double dyn_intensity = 0.2;
  double mean_diffusion = 1.0;
  double diff_intensity = 0.3;

  // Dimension sweep.
  std::vector<int> dims = {2, 3};

  // Convergence study: interval counts to compare; the lag tracks the
  // interval width (k = period / M).
  std::vector<int> m_list = {10, 20, 50, 100};

  // Climate index study.
  std::string data_path;
  int members = 1024;
  double regen_dt = 0.001;
  int regen_years = 0;  // 0 = length of the observed record
  double eep_threshold = 2.0;
  int eep_window = 6;
  std::string polarity = "absolute";  // absolute | signed

  std::string out_dir = ".";
  bool paper_scale = false;
};

// Throws ConfigError on out-of-range or inconsistent settings.
void validate(const ExperimentConfig& config);

// Restores publication-scale effort: 1024 trials and the full horizon list.
void apply_paper_scale(ExperimentConfig& config);

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

// Experiment drivers.  Each returns the full JSON report; run_enso also writes
// its data products (anomaly CSV, model JSONs, peak statistics) to out_dir.
nlohmann::json run_oned(const ExperimentConfig& config);
nlohmann::json run_nd(const ExperimentConfig& config);
nlohmann::json run_convergence(const ExperimentConfig& config);
nlohmann::json run_enso(const ExperimentConfig& config);

// Flattens a report into plot-ready CSV files: kind is "curves", "boxes", or
// "phases".
void emit_plot_data(const nlohmann::json& report, const std::string& kind,
                    const std::string& out_dir);

}  // namespace cslim
