#include "cslim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "cslim/enso.hpp"
#include "cslim/estimate.hpp"
#include "cslim/io.hpp"
#include "cslim/models.hpp"
#include "cslim/postproc.hpp"
#include "cslim/random.hpp"
#include "cslim/simulate.hpp"
#include "cslim/version.hpp"

namespace cslim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 6.283185307179586476925286766559;

nlohmann::json jnum(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

// Quantile summary of the finite entries of a sample.
nlohmann::json summary_json(const std::vector<double>& sample) {
  std::vector<double> valid;
  valid.reserve(sample.size());
  for (double v : sample) {
    if (std::isfinite(v)) valid.push_back(v);
  }
  nlohmann::json out;
  out["n"] = valid.size();
  if (valid.empty()) {
    out["p5"] = nullptr;
    out["p25"] = nullptr;
    out["p50"] = nullptr;
    out["p75"] = nullptr;
    out["p95"] = nullptr;
    return out;
  }
  out["p5"] = quantile(valid, 0.05);
  out["p25"] = quantile(valid, 0.25);
  out["p50"] = quantile(valid, 0.50);
  out["p75"] = quantile(valid, 0.75);
  out["p95"] = quantile(valid, 0.95);
  return out;
}

long steps_per_unit(double dt, const char* what) {
  if (!(dt > 0.0)) throw ConfigError(std::string(what) + " must be positive");
  const long s = std::lround(1.0 / dt);
  if (s < 1 || std::abs(static_cast<double>(s) * dt - 1.0) > 1e-9) {
    throw ConfigError(std::string(what) + " must divide the unit period");
  }
  return s;
}

// Runs fn(0..count-1) over a worker pool.  fn must not throw; trial errors are
// recorded inside the per-trial slots, and aggregation stays in index order.
void run_trials(int count, int threads, const std::function<void(int)>& fn) {
  int workers = threads > 0 ? threads
                            : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

MatrixFn sinusoid_truth(Matrix mean, double intensity) {
  return [mean = std::move(mean), intensity](double t) {
    return Matrix((1.0 + intensity * M_PI * std::sin(kTwoPi * t)) * mean);
  };
}

struct FitReport {
  FitResult fit;
  bool present = false;
};

struct EstimatorRecord {
  bool failed = false;
  std::string error;
  double e_dyn = kNaN;
  double e_diff = kNaN;
  double mean_dyn_err = kNaN;
  double mean_diff_err = kNaN;
  int flagged = 0;
  FitReport fit_dyn;
  FitReport fit_diff;
};

// Phase-average of the unflagged phases; empty optional when none survive.
bool phase_mean(const SeriesView& v, Matrix& out) {
  bool any = false;
  for (std::size_t j = 0; j < v.times.size(); ++j) {
    if (v.flagged(j)) continue;
    if (!any) {
      out = v.values[j];
      any = true;
    } else {
      out += v.values[j];
    }
  }
  if (!any) return false;
  std::size_t kept = 0;
  for (std::size_t j = 0; j < v.times.size(); ++j) kept += !v.flagged(j);
  out /= static_cast<double>(kept);
  return any;
}

FitReport fit_scalar_curve(const SeriesView& v) {
  std::vector<double> times, values;
  for (std::size_t j = 0; j < v.times.size(); ++j) {
    if (v.flagged(j)) continue;
    times.push_back(v.times[j]);
    values.push_back(v.values[j](0, 0));
  }
  FitReport out;
  if (times.size() < 3) return out;
  out.fit = sine_fit(values, times);
  out.present = true;
  return out;
}

void score_periodic(const PeriodicModel& model, const MatrixFn& truth_dyn,
                    const MatrixFn& truth_diff, const Matrix& mean_dyn,
                    const Matrix& mean_diff, bool fit_curves,
                    EstimatorRecord& rec) {
  rec.flagged = model.flagged_count();
  try {
    rec.e_dyn = relative_error_series(view(model, ModelField::dynamics), truth_dyn);
    rec.e_diff = relative_error_series(view(model, ModelField::diffusion), truth_diff);
    Matrix avg;
    if (phase_mean(view(model, ModelField::dynamics), avg)) {
      rec.mean_dyn_err = relative_error_const(avg, mean_dyn);
    }
    if (phase_mean(view(model, ModelField::diffusion), avg)) {
      rec.mean_diff_err = relative_error_const(avg, mean_diff);
    }
    if (fit_curves && model.dim() == 1) {
      rec.fit_dyn = fit_scalar_curve(view(model, ModelField::dynamics));
      rec.fit_diff = fit_scalar_curve(view(model, ModelField::diffusion));
    }
  } catch (const std::exception& err) {
    rec.failed = true;
    rec.error = err.what();
  }
}

void score_constant(const LimEstimate& est, int period, const MatrixFn& truth_dyn,
                    const MatrixFn& truth_diff, const Matrix& mean_dyn,
                    const Matrix& mean_diff, bool fit_curves,
                    EstimatorRecord& rec) {
  try {
    double num_a = 0, den_a = 0, num_q = 0, den_q = 0;
    for (int j = 0; j < period; ++j) {
      const double t = static_cast<double>(j) / period;
      const Matrix ta = truth_dyn(t);
      const Matrix tq = truth_diff(t);
      num_a += (est.dynamics - ta).squaredNorm();
      den_a += ta.squaredNorm();
      num_q += (est.diffusion - tq).squaredNorm();
      den_q += tq.squaredNorm();
    }
    if (den_a == 0.0 || den_q == 0.0) throw ZeroTruth("constant model scoring");
    rec.e_dyn = std::sqrt(num_a / den_a);
    rec.e_diff = std::sqrt(num_q / den_q);
    rec.mean_dyn_err = relative_error_const(est.dynamics, mean_dyn);
    rec.mean_diff_err = relative_error_const(est.diffusion, mean_diff);
    if (fit_curves && est.dynamics.rows() == 1) {
      std::vector<double> times(period), va(period), vq(period);
      for (int j = 0; j < period; ++j) {
        times[j] = static_cast<double>(j) / period;
        va[j] = est.dynamics(0, 0);
        vq[j] = est.diffusion(0, 0);
      }
      rec.fit_dyn.fit = sine_fit(va, times);
      rec.fit_dyn.present = true;
      rec.fit_diff.fit = sine_fit(vq, times);
      rec.fit_diff.present = true;
    }
  } catch (const std::exception& err) {
    rec.failed = true;
    rec.error = err.what();
  }
}

nlohmann::json fit_json(const FitReport& fr) {
  if (!fr.present) return nullptr;
  return {{"mean", jnum(fr.fit.mean)},
          {"intensity", jnum(fr.fit.intensity)},
          {"phase", jnum(fr.fit.phase)},
          {"residual", jnum(fr.fit.residual)},
          {"degenerate", fr.fit.degenerate_mean}};
}

nlohmann::json record_json(const EstimatorRecord& rec) {
  return {{"failed", rec.failed},
          {"error", rec.error},
          {"E_A", jnum(rec.e_dyn)},
          {"E_Q", jnum(rec.e_diff)},
          {"mean_A_err", jnum(rec.mean_dyn_err)},
          {"mean_Q_err", jnum(rec.mean_diff_err)},
          {"flagged", rec.flagged},
          {"fit_A", fit_json(rec.fit_dyn)},
          {"fit_Q", fit_json(rec.fit_diff)}};
}

const char* const kEstimators[4] = {"lim", "cslim", "ecslim", "lcslim"};

nlohmann::json aggregate_estimators(
    const std::vector<std::array<EstimatorRecord, 4>>& records, bool with_fits) {
  nlohmann::json out;
  for (int e = 0; e < 4; ++e) {
    std::vector<double> ea, eq, ma, mq, pa, pq, ia, iq;
    int failed = 0, flagged = 0;
    for (const auto& trial : records) {
      const EstimatorRecord& rec = trial[e];
      if (rec.failed) {
        ++failed;
        continue;
      }
      ea.push_back(rec.e_dyn);
      eq.push_back(rec.e_diff);
      ma.push_back(rec.mean_dyn_err);
      mq.push_back(rec.mean_diff_err);
      flagged += rec.flagged;
      if (rec.fit_dyn.present && !rec.fit_dyn.fit.degenerate_mean) {
        pa.push_back(rec.fit_dyn.fit.phase);
        ia.push_back(rec.fit_dyn.fit.intensity);
      }
      if (rec.fit_diff.present && !rec.fit_diff.fit.degenerate_mean) {
        pq.push_back(rec.fit_diff.fit.phase);
        iq.push_back(rec.fit_diff.fit.intensity);
      }
    }
    nlohmann::json block;
    block["E_A"] = summary_json(ea);
    block["E_Q"] = summary_json(eq);
    block["mean_A_err"] = summary_json(ma);
    block["mean_Q_err"] = summary_json(mq);
    if (with_fits) {
      block["phase_A"] = summary_json(pa);
      block["phase_Q"] = summary_json(pq);
      block["intensity_A"] = summary_json(ia);
      block["intensity_Q"] = summary_json(iq);
    }
    block["failed"] = failed;
    block["flagged_total"] = flagged;
    out[kEstimators[e]] = std::move(block);
  }
  return out;
}

nlohmann::json curve_json(const PeriodicModel& model) {
  nlohmann::json out;
  out["t"] = model.times;
  nlohmann::json a = nlohmann::json::array();
  nlohmann::json q = nlohmann::json::array();
  nlohmann::json flags = nlohmann::json::array();
  for (int j = 0; j < model.phases(); ++j) {
    a.push_back(jnum(model.dynamics[j](0, 0)));
    q.push_back(jnum(model.diffusions[j](0, 0)));
    flags.push_back(to_string(model.flags[j]));
  }
  out["A"] = std::move(a);
  out["Q"] = std::move(q);
  out["flags"] = std::move(flags);
  return out;
}

int derived_ma_window(const FilterParams& filters, int period, int intervals) {
  if (filters.ma_window > 0) return filters.ma_window;
  const double ratio = static_cast<double>(period) / intervals;
  const int w = 2 * static_cast<int>(std::lround((ratio - 1.0) / 2.0)) + 1;
  return std::max(1, w);
}

double derived_gw_sigma(const FilterParams& filters, int period, int intervals) {
  if (filters.gw_sigma > 0.0) return filters.gw_sigma;
  return static_cast<double>(period) / (kTwoPi * intervals);
}

}  // namespace

void validate(const ExperimentConfig& config) {
  const bool known = config.experiment == "oned" || config.experiment == "nd" ||
                     config.experiment == "convergence" || config.experiment == "enso";
  if (!known) {
    throw ConfigError("unknown experiment: " + config.experiment);
  }
  const long steps = steps_per_unit(config.sim_dt, "sim_dt");
  if (config.stride < 1) throw ConfigError("stride must be at least 1");
  if (steps % config.stride != 0) {
    throw ConfigError("stride must divide the steps per period");
  }
  const long period = steps / config.stride;
  if (period < 2) throw ConfigError("subsampled period has fewer than 2 phases");
  if (config.tf_list.empty()) throw ConfigError("tf_list must not be empty");
  for (long tf : config.tf_list) {
    if (tf < 2) throw ConfigError("each Tf must cover at least two periods");
  }
  if (config.trials < 1) throw ConfigError("trials must be at least 1");
  if (config.burn_in_periods < 0) throw ConfigError("burn_in_periods must be >= 0");
  if (config.threads < 0) throw ConfigError("threads must be >= 0");
  if (!(config.failure_budget >= 0.0 && config.failure_budget <= 1.0)) {
    throw ConfigError("failure_budget must lie in [0, 1]");
  }
  if (config.intervals < 1) throw ConfigError("intervals must be at least 1");
  if (period % config.intervals != 0) {
    throw ConfigError("intervals must divide the subsampled period");
  }
  if (config.lag_steps < 1 || config.lag_steps > period) {
    throw ConfigError("lag_steps must lie in [1, period]");
  }
  if (config.filters.ma_window < 0 ||
      (config.filters.ma_window > 0 && config.filters.ma_window % 2 == 0)) {
    throw ConfigError("filters.ma_window must be 0 (auto) or odd");
  }
  if (config.filters.lp_cutoff < 0) throw ConfigError("filters.lp_cutoff must be >= 0");
  if (config.filters.gw_sigma < 0.0) throw ConfigError("filters.gw_sigma must be >= 0");

  if (config.experiment == "oned" || config.experiment == "nd") {
    if (config.intervals < 3) {
      throw ConfigError("the original variant's central stencil needs intervals >= 3");
    }
  }
  if (config.experiment == "oned") {
    if (!(config.mean_dynamics < 0.0)) {
      throw ConfigError("mean_dynamics must be negative (stable)");
    }
    if (!(config.mean_diffusion >= 0.0)) {
      throw ConfigError("mean_diffusion must be nonnegative");
    }
    if (std::abs(config.diff_intensity) * M_PI > 1.0 + 1e-12) {
      throw ConfigError("|diff_intensity| * pi > 1 drives the diffusion negative");
    }
  }
  if (config.experiment == "nd") {
    if (config.dims.empty()) throw ConfigError("dims must not be empty");
    for (int n : config.dims) {
      if (n < 1 || n > 6) throw ConfigError("each dimension must lie in [1, 6]");
    }
  }
  if (config.experiment == "convergence") {
    if (config.m_list.empty()) throw ConfigError("m_list must not be empty");
    int prev = 0;
    for (int m : config.m_list) {
      if (m < 2) throw ConfigError("each M must be at least 2");
      if (m <= prev) throw ConfigError("m_list must ascend");
      if (period % m != 0) throw ConfigError("each M must divide the period");
      prev = m;
    }
  }
  if (config.experiment == "enso") {
    if (config.data_path.empty()) throw ConfigError("enso requires data_path");
    if (config.members < 1) throw ConfigError("members must be at least 1");
    const long regen_steps = steps_per_unit(config.regen_dt, "regen_dt");
    if (regen_steps < 12) {
      throw ConfigError("regen_dt must divide the year into at least 12 steps");
    }
    if (config.regen_years < 0) throw ConfigError("regen_years must be >= 0");
    if (!(config.eep_threshold > 0.0)) {
      throw ConfigError("eep_threshold must be positive");
    }
    if (config.eep_window < 1) throw ConfigError("eep_window must be at least 1");
    if (config.polarity != "absolute" && config.polarity != "signed") {
      throw ConfigError("polarity must be 'absolute' or 'signed'");
    }
  }
}

void apply_paper_scale(ExperimentConfig& config) {
  config.trials = 1024;
  if (config.experiment == "oned") {
    config.tf_list = {100, 1000, 5000};
  } else if (config.experiment == "nd" || config.experiment == "convergence") {
    config.tf_list = {100, 1000, 5000};
  } else if (config.experiment == "enso") {
    config.members = 1024;
  }
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json doc;
  doc["experiment"] = c.experiment;
  doc["sim_dt"] = c.sim_dt;
  doc["stride"] = c.stride;
  doc["tf_list"] = c.tf_list;
  doc["trials"] = c.trials;
  doc["burn_in_periods"] = c.burn_in_periods;
  doc["master_seed"] = c.master_seed;
  doc["threads"] = c.threads;
  doc["failure_budget"] = c.failure_budget;
  doc["intervals"] = c.intervals;
  doc["lag_steps"] = c.lag_steps;
  doc["filters"] = {{"ma_window", c.filters.ma_window},
                    {"lp_cutoff", c.filters.lp_cutoff},
                    {"gw_sigma", c.filters.gw_sigma}};
  doc["mean_dynamics"] = c.mean_dynamics;
  doc["dyn_intensity"] = c.dyn_intensity;
  doc["mean_diffusion"] = c.mean_diffusion;
  doc["diff_intensity"] = c.diff_intensity;
  doc["dims"] = c.dims;
  doc["m_list"] = c.m_list;
  doc["data_path"] = c.data_path;
  doc["members"] = c.members;
  doc["regen_dt"] = c.regen_dt;
  doc["regen_years"] = c.regen_years;
  doc["eep_threshold"] = c.eep_threshold;
  doc["eep_window"] = c.eep_window;
  doc["polarity"] = c.polarity;
  doc["out_dir"] = c.out_dir;
  doc["paper_scale"] = c.paper_scale;
  return doc;
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "experiment") c.experiment = value.get<std::string>();
      else if (key == "sim_dt") c.sim_dt = value.get<double>();
      else if (key == "stride") c.stride = value.get<int>();
      else if (key == "tf_list") c.tf_list = value.get<std::vector<long>>();
      else if (key == "trials") c.trials = value.get<int>();
      else if (key == "burn_in_periods") c.burn_in_periods = value.get<long>();
      else if (key == "master_seed") c.master_seed = value.get<std::uint64_t>();
      else if (key == "threads") c.threads = value.get<int>();
      else if (key == "failure_budget") c.failure_budget = value.get<double>();
      else if (key == "intervals") c.intervals = value.get<int>();
      else if (key == "lag_steps") c.lag_steps = value.get<int>();
      else if (key == "filters") {
        for (const auto& [fk, fv] : value.items()) {
          if (fk == "ma_window") c.filters.ma_window = fv.get<int>();
          else if (fk == "lp_cutoff") c.filters.lp_cutoff = fv.get<int>();
          else if (fk == "gw_sigma") c.filters.gw_sigma = fv.get<double>();
          else throw ConfigError("unknown filters key: " + fk);
        }
      } else if (key == "mean_dynamics") c.mean_dynamics = value.get<double>();
      else if (key == "dyn_intensity") c.dyn_intensity = value.get<double>();
      else if (key == "mean_diffusion") c.mean_diffusion = value.get<double>();
      else if (key == "diff_intensity") c.diff_intensity = value.get<double>();
      else if (key == "dims") c.dims = value.get<std::vector<int>>();
      else if (key == "m_list") c.m_list = value.get<std::vector<int>>();
      else if (key == "data_path") c.data_path = value.get<std::string>();
      else if (key == "members") c.members = value.get<int>();
      else if (key == "regen_dt") c.regen_dt = value.get<double>();
      else if (key == "regen_years") c.regen_years = value.get<int>();
      else if (key == "eep_threshold") c.eep_threshold = value.get<double>();
      else if (key == "eep_window") c.eep_window = value.get<int>();
      else if (key == "polarity") c.polarity = value.get<std::string>();
      else if (key == "out_dir") c.out_dir = value.get<std::string>();
      else if (key == "paper_scale") c.paper_scale = value.get<bool>();
      else throw ConfigError("unknown config key: " + key);
    }
  } catch (const nlohmann::json::exception& err) {
    throw ConfigError(std::string("config: ") + err.what());
  }
  if (c.paper_scale) apply_paper_scale(c);
  return c;
}

namespace {

nlohmann::json report_shell(const ExperimentConfig& config) {
  nlohmann::json doc;
  doc["experiment"] = config.experiment;
  doc["version"] = kVersion;
  doc["config"] = config_to_json(config);
  return doc;
}

struct OnedTrial {
  bool sim_failed = false;
  std::string sim_error;
  std::array<EstimatorRecord, 4> models;
  bool filters_valid = false;
  double filt_a[4] = {kNaN, kNaN, kNaN, kNaN};  // raw, ma, lp, gw
  double filt_q[4] = {kNaN, kNaN, kNaN, kNaN};
  nlohmann::json curves;  // only kept on trial 0
};

}  // namespace

nlohmann::json run_oned(const ExperimentConfig& config) {
  validate(config);
  const auto t_start = std::chrono::steady_clock::now();
  const long steps = steps_per_unit(config.sim_dt, "sim_dt");
  const int period = static_cast<int>(steps / config.stride);
  const int ma_window = derived_ma_window(config.filters, period, config.intervals);
  const double gw_sigma = derived_gw_sigma(config.filters, period, config.intervals);

  Matrix mean_a(1, 1), mean_q(1, 1);
  mean_a << config.mean_dynamics;
  mean_q << config.mean_diffusion;
  const SystemSpec system = sinusoidal_system(mean_a, config.dyn_intensity, mean_q,
                                              config.diff_intensity);
  const MatrixFn truth_a = sinusoid_truth(mean_a, config.dyn_intensity);
  const MatrixFn truth_q = sinusoid_truth(mean_q, config.diff_intensity);

  nlohmann::json results = nlohmann::json::array();
  bool budget_exceeded = false;

  for (std::size_t tf_index = 0; tf_index < config.tf_list.size(); ++tf_index) {
    const long tf = config.tf_list[tf_index];
    std::vector<OnedTrial> trials(config.trials);

    run_trials(config.trials, config.threads, [&](int i) {
      OnedTrial& trial = trials[i];
      const std::uint64_t stream_id =
          tf_index * static_cast<std::uint64_t>(config.trials) + i;
      RandomStream stream(config.master_seed, stream_id);
      try {
        TimeSeries path = sample_path(system, config.sim_dt, tf, stream,
                                      Vector::Zero(1), config.burn_in_periods);
        TimeSeries record = subsample(path, config.stride);
        path.samples.resize(0, 0);

        LimEstimate lim;
        bool have_lim = false;
        try {
          lim = classical_lim(record, config.lag_steps);
          have_lim = true;
          score_constant(lim, period, truth_a, truth_q, mean_a, mean_q, true,
                         trial.models[0]);
        } catch (const std::exception& err) {
          trial.models[0].failed = true;
          trial.models[0].error = err.what();
        }

        PeriodicModel original, shifted, local;
        bool have_orig = false, have_e = false, have_l = false;
        try {
          original = cs_lim(record, period, config.intervals, config.lag_steps,
                            CsVariant::original);
          have_orig = true;
          score_periodic(original, truth_a, truth_q, mean_a, mean_q, true,
                         trial.models[1]);
        } catch (const std::exception& err) {
          trial.models[1].failed = true;
          trial.models[1].error = err.what();
        }
        try {
          shifted = cs_lim(record, period, config.intervals, config.lag_steps,
                           CsVariant::e);
          have_e = true;
          score_periodic(shifted, truth_a, truth_q, mean_a, mean_q, true,
                         trial.models[2]);
        } catch (const std::exception& err) {
          trial.models[2].failed = true;
          trial.models[2].error = err.what();
        }
        try {
          local = l_cs_lim(record, period);
          have_l = true;
          score_periodic(local, truth_a, truth_q, mean_a, mean_q, true,
                         trial.models[3]);
        } catch (const std::exception& err) {
          trial.models[3].failed = true;
          trial.models[3].error = err.what();
        }

        // Smoothing comparison on the local model's dynamics and diffusion.
        if (have_l && local.flagged_count() == 0) {
          PeriodicMatrixSeries raw_a{local.times, local.dynamics};
          PeriodicMatrixSeries raw_q{local.times, local.diffusions};
          const PeriodicMatrixSeries smooth_a[3] = {
              moving_average(raw_a, ma_window),
              lowpass(raw_a, config.filters.lp_cutoff),
              gaussian_smooth(raw_a, gw_sigma)};
          const PeriodicMatrixSeries smooth_q[3] = {
              moving_average(raw_q, ma_window),
              lowpass(raw_q, config.filters.lp_cutoff),
              gaussian_smooth(raw_q, gw_sigma)};
          trial.filt_a[0] = relative_error_series(view(raw_a), truth_a);
          trial.filt_q[0] = relative_error_series(view(raw_q), truth_q);
          for (int f = 0; f < 3; ++f) {
            trial.filt_a[f + 1] = relative_error_series(view(smooth_a[f]), truth_a);
            trial.filt_q[f + 1] = relative_error_series(view(smooth_q[f]), truth_q);
          }
          trial.filters_valid = true;
        }

        if (i == 0) {
          nlohmann::json curves;
          curves["period"] = period;
          nlohmann::json truth;
          nlohmann::json tt = nlohmann::json::array();
          nlohmann::json ta = nlohmann::json::array();
          nlohmann::json tq = nlohmann::json::array();
          for (int j = 0; j < period; ++j) {
            const double t = static_cast<double>(j) / period;
            tt.push_back(t);
            ta.push_back(truth_a(t)(0, 0));
            tq.push_back(truth_q(t)(0, 0));
          }
          truth["t"] = std::move(tt);
          truth["A"] = std::move(ta);
          truth["Q"] = std::move(tq);
          curves["truth"] = std::move(truth);
          if (have_lim) {
            curves["lim"] = {{"A", jnum(lim.dynamics(0, 0))},
                             {"Q", jnum(lim.diffusion(0, 0))}};
          }
          if (have_orig) curves["cslim"] = curve_json(original);
          if (have_e) curves["ecslim"] = curve_json(shifted);
          if (have_l) curves["lcslim"] = curve_json(local);
          trial.curves = std::move(curves);
        }
      } catch (const std::exception& err) {
        trial.sim_failed = true;
        trial.sim_error = err.what();
        for (auto& rec : trial.models) {
          rec.failed = true;
          rec.error = err.what();
        }
      }
    });

    // Reduction in trial-index order keeps the report deterministic.
    nlohmann::json trial_docs = nlohmann::json::array();
    std::vector<std::array<EstimatorRecord, 4>> records;
    records.reserve(trials.size());
    std::vector<double> fa[4], fq[4];
    int failed_trials = 0;
    for (int i = 0; i < config.trials; ++i) {
      const OnedTrial& trial = trials[i];
      records.push_back(trial.models);
      bool all_failed = true;
      nlohmann::json models;
      for (int e = 0; e < 4; ++e) {
        models[kEstimators[e]] = record_json(trial.models[e]);
        all_failed = all_failed && trial.models[e].failed;
      }
      if (trial.sim_failed || all_failed) ++failed_trials;
      nlohmann::json filters = {{"valid", trial.filters_valid},
                                {"E_A_raw", jnum(trial.filt_a[0])},
                                {"E_A_ma", jnum(trial.filt_a[1])},
                                {"E_A_lp", jnum(trial.filt_a[2])},
                                {"E_A_gw", jnum(trial.filt_a[3])},
                                {"E_Q_raw", jnum(trial.filt_q[0])},
                                {"E_Q_ma", jnum(trial.filt_q[1])},
                                {"E_Q_lp", jnum(trial.filt_q[2])},
                                {"E_Q_gw", jnum(trial.filt_q[3])}};
      for (int f = 0; f < 4; ++f) {
        fa[f].push_back(trial.filt_a[f]);
        fq[f].push_back(trial.filt_q[f]);
      }
      trial_docs.push_back({{"trial", i},
                            {"stream_id", tf_index * static_cast<std::uint64_t>(
                                              config.trials) + i},
                            {"failed", trial.sim_failed},
                            {"error", trial.sim_error},
                            {"models", std::move(models)},
                            {"filters", std::move(filters)}});
    }

    nlohmann::json aggregates = aggregate_estimators(records, true);
    aggregates["filters"] = {{"E_A_raw", summary_json(fa[0])},
                             {"E_A_ma", summary_json(fa[1])},
                             {"E_A_lp", summary_json(fa[2])},
                             {"E_A_gw", summary_json(fa[3])},
                             {"E_Q_raw", summary_json(fq[0])},
                             {"E_Q_ma", summary_json(fq[1])},
                             {"E_Q_lp", summary_json(fq[2])},
                             {"E_Q_gw", summary_json(fq[3])}};

    const bool exceeded =
        static_cast<double>(failed_trials) >
        config.failure_budget * static_cast<double>(config.trials);
    budget_exceeded = budget_exceeded || exceeded;
    results.push_back({{"tf", tf},
                       {"dim", 1},
                       {"failed_trials", failed_trials},
                       {"budget_exceeded", exceeded},
                       {"ma_window", ma_window},
                       {"lp_cutoff", config.filters.lp_cutoff},
                       {"gw_sigma", gw_sigma},
                       {"trials", std::move(trial_docs)},
                       {"aggregates", std::move(aggregates)},
                       {"curves", trials[0].curves}});
  }

  nlohmann::json doc = report_shell(config);
  doc["results"] = std::move(results);
  doc["failure_budget_exceeded"] = budget_exceeded;
  doc["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return doc;
}

namespace {

struct NdTrial {
  bool sim_failed = false;
  std::string sim_error;
  std::array<EstimatorRecord, 4> models;
};

}  // namespace

nlohmann::json run_nd(const ExperimentConfig& config) {
  validate(config);
  const auto t_start = std::chrono::steady_clock::now();
  const long steps = steps_per_unit(config.sim_dt, "sim_dt");
  const int period = static_cast<int>(steps / config.stride);

  nlohmann::json results = nlohmann::json::array();
  bool budget_exceeded = false;
  std::uint64_t block_index = 0;

  for (int dim : config.dims) {
    for (long tf : config.tf_list) {
      std::vector<NdTrial> trials(config.trials);
      const std::uint64_t base_id =
          block_index * static_cast<std::uint64_t>(config.trials);

      run_trials(config.trials, config.threads, [&](int i) {
        NdTrial& trial = trials[i];
        RandomStream stream(config.master_seed, base_id + i);
        try {
          // The draw and the path share one stream, so a trial is replayable
          // from (masterSeed, streamId) alone.
          const auto [mean_a, mean_q] = random_stable_system(dim, stream);
          const SystemSpec system = sinusoidal_system(
              mean_a, config.dyn_intensity, mean_q, config.diff_intensity);
          const MatrixFn truth_a = sinusoid_truth(mean_a, config.dyn_intensity);
          const MatrixFn truth_q = sinusoid_truth(mean_q, config.diff_intensity);

          TimeSeries path = sample_path(system, config.sim_dt, tf, stream,
                                        Vector::Zero(dim), config.burn_in_periods);
          TimeSeries record = subsample(path, config.stride);
          path.samples.resize(0, 0);

          try {
            const LimEstimate lim = classical_lim(record, config.lag_steps);
            score_constant(lim, period, truth_a, truth_q, mean_a, mean_q, false,
                           trial.models[0]);
          } catch (const std::exception& err) {
            trial.models[0].failed = true;
            trial.models[0].error = err.what();
          }
          try {
            const PeriodicModel original =
                cs_lim(record, period, config.intervals, config.lag_steps,
                       CsVariant::original);
            score_periodic(original, truth_a, truth_q, mean_a, mean_q, false,
                           trial.models[1]);
          } catch (const std::exception& err) {
            trial.models[1].failed = true;
            trial.models[1].error = err.what();
          }
          try {
            const PeriodicModel shifted =
                cs_lim(record, period, config.intervals, config.lag_steps,
                       CsVariant::e);
            score_periodic(shifted, truth_a, truth_q, mean_a, mean_q, false,
                           trial.models[2]);
          } catch (const std::exception& err) {
            trial.models[2].failed = true;
            trial.models[2].error = err.what();
          }
          try {
            // Scored after averaging down to the subdivided grid, which is how
            // the curves are compared across estimators.
            const PeriodicModel local = l_cs_lim(record, period);
            const PeriodicModel averaged =
                interval_average(local, config.intervals);
            score_periodic(averaged, truth_a, truth_q, mean_a, mean_q, false,
                           trial.models[3]);
            trial.models[3].flagged = local.flagged_count();
          } catch (const std::exception& err) {
            trial.models[3].failed = true;
            trial.models[3].error = err.what();
          }
        } catch (const std::exception& err) {
          trial.sim_failed = true;
          trial.sim_error = err.what();
          for (auto& rec : trial.models) {
            rec.failed = true;
            rec.error = err.what();
          }
        }
      });

      nlohmann::json trial_docs = nlohmann::json::array();
      std::vector<std::array<EstimatorRecord, 4>> records;
      records.reserve(trials.size());
      int failed_trials = 0;
      for (int i = 0; i < config.trials; ++i) {
        const NdTrial& trial = trials[i];
        records.push_back(trial.models);
        bool all_failed = true;
        nlohmann::json models;
        for (int e = 0; e < 4; ++e) {
          models[kEstimators[e]] = record_json(trial.models[e]);
          all_failed = all_failed && trial.models[e].failed;
        }
        if (trial.sim_failed || all_failed) ++failed_trials;
        trial_docs.push_back({{"trial", i},
                              {"stream_id", base_id + i},
                              {"failed", trial.sim_failed},
                              {"error", trial.sim_error},
                              {"models", std::move(models)}});
      }

      const bool exceeded =
          static_cast<double>(failed_trials) >
          config.failure_budget * static_cast<double>(config.trials);
      budget_exceeded = budget_exceeded || exceeded;
      results.push_back({{"tf", tf},
                         {"dim", dim},
                         {"failed_trials", failed_trials},
                         {"budget_exceeded", exceeded},
                         {"trials", std::move(trial_docs)},
                         {"aggregates", aggregate_estimators(records, false)}});
      ++block_index;
    }
  }

  nlohmann::json doc = report_shell(config);
  doc["results"] = std::move(results);
  doc["failure_budget_exceeded"] = budget_exceeded;
  doc["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return doc;
}

namespace {

struct ConvergenceTrial {
  bool failed = false;
  std::string error;
  std::vector<double> diff_a;  // one entry per M
  std::vector<double> diff_q;
};

}  // namespace

nlohmann::json run_convergence(const ExperimentConfig& config) {
  validate(config);
  const auto t_start = std::chrono::steady_clock::now();
  const long steps = steps_per_unit(config.sim_dt, "sim_dt");
  const int period = static_cast<int>(steps / config.stride);

  Matrix mean_a(1, 1), mean_q(1, 1);
  mean_a << config.mean_dynamics;
  mean_q << config.mean_diffusion;
  const SystemSpec system = sinusoidal_system(mean_a, config.dyn_intensity, mean_q,
                                              config.diff_intensity);

  nlohmann::json results = nlohmann::json::array();
  bool budget_exceeded = false;

  for (std::size_t tf_index = 0; tf_index < config.tf_list.size(); ++tf_index) {
    const long tf = config.tf_list[tf_index];
    std::vector<ConvergenceTrial> trials(config.trials);

    run_trials(config.trials, config.threads, [&](int i) {
      ConvergenceTrial& trial = trials[i];
      trial.diff_a.assign(config.m_list.size(), kNaN);
      trial.diff_q.assign(config.m_list.size(), kNaN);
      RandomStream stream(config.master_seed,
                          tf_index * static_cast<std::uint64_t>(config.trials) + i);
      try {
        TimeSeries path = sample_path(system, config.sim_dt, tf, stream,
                                      Vector::Zero(1), config.burn_in_periods);
        TimeSeries record = subsample(path, config.stride);
        path.samples.resize(0, 0);
        const PeriodicModel local = l_cs_lim(record, period);
        for (std::size_t mi = 0; mi < config.m_list.size(); ++mi) {
          const int m = config.m_list[mi];
          // The lag tracks the interval width (k dt = 1/M), so refining M
          // shrinks both together and the exponential fit approaches the
          // one-step linear fit; at M = P the two estimators coincide.
          const PeriodicModel e_model =
              cs_lim(record, period, m, period / m, CsVariant::e);
          trial.diff_a[mi] = relative_difference(
              view(e_model, ModelField::dynamics), view(local, ModelField::dynamics));
          trial.diff_q[mi] = relative_difference(
              view(e_model, ModelField::diffusion), view(local, ModelField::diffusion));
        }
      } catch (const std::exception& err) {
        trial.failed = true;
        trial.error = err.what();
      }
    });

    nlohmann::json trial_docs = nlohmann::json::array();
    int failed_trials = 0;
    for (int i = 0; i < config.trials; ++i) {
      const ConvergenceTrial& trial = trials[i];
      if (trial.failed) ++failed_trials;
      nlohmann::json diffs = nlohmann::json::array();
      for (std::size_t mi = 0; mi < config.m_list.size(); ++mi) {
        diffs.push_back({{"M", config.m_list[mi]},
                         {"dA", jnum(trial.diff_a[mi])},
                         {"dQ", jnum(trial.diff_q[mi])}});
      }
      trial_docs.push_back({{"trial", i},
                            {"stream_id", tf_index * static_cast<std::uint64_t>(
                                              config.trials) + i},
                            {"failed", trial.failed},
                            {"error", trial.error},
                            {"diffs", std::move(diffs)}});
    }

    nlohmann::json aggregates = nlohmann::json::array();
    for (std::size_t mi = 0; mi < config.m_list.size(); ++mi) {
      std::vector<double> da, dq;
      for (const auto& trial : trials) {
        if (trial.failed) continue;
        da.push_back(trial.diff_a[mi]);
        dq.push_back(trial.diff_q[mi]);
      }
      aggregates.push_back({{"M", config.m_list[mi]},
                            {"dA", summary_json(da)},
                            {"dQ", summary_json(dq)}});
    }

    const bool exceeded =
        static_cast<double>(failed_trials) >
        config.failure_budget * static_cast<double>(config.trials);
    budget_exceeded = budget_exceeded || exceeded;
    results.push_back({{"tf", tf},
                       {"dim", 1},
                       {"failed_trials", failed_trials},
                       {"budget_exceeded", exceeded},
                       {"trials", std::move(trial_docs)},
                       {"aggregates", std::move(aggregates)}});
  }

  nlohmann::json doc = report_shell(config);
  doc["results"] = std::move(results);
  doc["failure_budget_exceeded"] = budget_exceeded;
  doc["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return doc;
}

namespace {

nlohmann::json quantiles_json(const QuantileSummary& q) {
  return {{"p5", q.p5}, {"p25", q.p25}, {"p50", q.p50}, {"p75", q.p75},
          {"p95", q.p95}};
}

nlohmann::json eep_stats_json(const EepMonthlyStats& stats) {
  nlohmann::json months = nlohmann::json::array();
  for (int m = 0; m < 12; ++m) {
    nlohmann::json entry = quantiles_json(stats.per_month[m]);
    entry["month"] = m + 1;
    entry["mean"] = stats.month_means[m];
    months.push_back(std::move(entry));
  }
  nlohmann::json total = quantiles_json(stats.total);
  total["mean"] = stats.total_mean;
  nlohmann::json out;
  out["per_month"] = std::move(months);
  out["total"] = std::move(total);
  out["member_totals"] = stats.member_totals;
  return out;
}

}  // namespace

nlohmann::json run_enso(const ExperimentConfig& config) {
  validate(config);
  const auto t_start = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const auto out_path = [&](const char* name) {
    return (fs::path(config.out_dir) / name).string();
  };

  const PeakPolarity polarity = config.polarity == "signed"
                                    ? PeakPolarity::signed_max
                                    : PeakPolarity::absolute_value;

  const MonthlySeries raw = load_monthly_index(config.data_path);
  const MonthlySeries anomaly = compute_anomaly(raw);
  write_monthly_csv(anomaly, out_path("anomaly.csv"));

  const auto observed_peaks =
      detect_eep(anomaly, config.eep_threshold, config.eep_window, polarity);
  std::array<long, 12> observed_by_month{};
  for (const EepRecord& peak : observed_peaks) ++observed_by_month[peak.month - 1];

  const EnsoFit fit = fit_enso_models(anomaly);
  write_model_json(fit.e_model, out_path("model_enso.json"));
  write_model_json(fit.l_model, out_path("model_enso_l.json"));
  write_model_csv(fit.e_model, out_path("model_enso.csv"));
  write_model_csv(fit.l_model, out_path("model_enso_l.csv"));

  const int years = config.regen_years > 0
                        ? config.regen_years
                        : static_cast<int>((anomaly.size() -
                                            (13 - anomaly.start_month) % 12) / 12);

  nlohmann::json model_stats;
  const PeriodicModel* fitted[2] = {&fit.e_model, &fit.l_model};
  const char* names[2] = {"ecslim", "lcslim"};
  for (int k = 0; k < 2; ++k) {
    const RandomStream base(config.master_seed, static_cast<std::uint64_t>(k));
    const auto members = ensemble_regenerate(*fitted[k], years, config.members,
                                             config.regen_dt, base);
    const EepMonthlyStats stats =
        eep_monthly_stats(members, config.eep_threshold, config.eep_window, polarity);
    model_stats[names[k]] = eep_stats_json(stats);
  }

  nlohmann::json observed;
  observed["start_year"] = anomaly.start_year;
  observed["start_month"] = anomaly.start_month;
  observed["months"] = anomaly.size();
  observed["total"] = observed_peaks.size();
  observed["per_month"] = observed_by_month;
  nlohmann::json peaks = nlohmann::json::array();
  for (const EepRecord& peak : observed_peaks) {
    peaks.push_back({{"index", peak.index},
                     {"year", peak.year},
                     {"month", peak.month},
                     {"value", peak.value}});
  }
  observed["peaks"] = std::move(peaks);

  // Per-phase curves for the figure-style outputs (1-D record, so scalars).
  nlohmann::json curves;
  {
    nlohmann::json rows = nlohmann::json::array();
    for (int m = 0; m < 12; ++m) {
      nlohmann::json row;
      row["month"] = m + 1;
      row["t"] = fit.covariance.times[m];
      row["C"] = jnum(fit.covariance.values[m](0, 0));
      row["dCdt"] = jnum(fit.covariance_rate.values[m](0, 0));
      row["A_e"] = jnum(fit.e_model.dynamics[m](0, 0));
      row["Q_e"] = jnum(fit.e_model.diffusions[m](0, 0));
      row["A_l"] = jnum(fit.l_model.dynamics[m](0, 0));
      row["Q_l"] = jnum(fit.l_model.diffusions[m](0, 0));
      rows.push_back(std::move(row));
    }
    curves["per_month"] = std::move(rows);
  }

  nlohmann::json doc = report_shell(config);
  doc["observed"] = std::move(observed);
  doc["models"] = model_stats;
  doc["curves"] = std::move(curves);
  doc["regen_years"] = years;
  doc["artifacts"] = {out_path("anomaly.csv"), out_path("model_enso.json"),
                      out_path("model_enso_l.json"), out_path("model_enso.csv"),
                      out_path("model_enso_l.csv"), out_path("eep_stats.json")};

  nlohmann::json stats_doc;
  stats_doc["threshold"] = config.eep_threshold;
  stats_doc["window"] = config.eep_window;
  stats_doc["polarity"] = config.polarity;
  stats_doc["members"] = config.members;
  stats_doc["years"] = years;
  stats_doc["observed"] = doc["observed"];
  stats_doc["models"] = model_stats;
  write_json_file(stats_doc, out_path("eep_stats.json"));

  doc["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return doc;
}

namespace {

// Scalar circular interpolation over ascending phase nodes in [0, 1).
double interp_phase(const std::vector<double>& times,
                    const std::vector<double>& values, double tau) {
  const std::size_t m = times.size();
  if (m == 0) return kNaN;
  if (m == 1) return values[0];
  auto it = std::upper_bound(times.begin(), times.end(), tau);
  double t0, t1, v0, v1;
  if (it == times.begin()) {
    t0 = times.back() - 1.0;
    v0 = values.back();
    t1 = times.front();
    v1 = values.front();
  } else if (it == times.end()) {
    t0 = times.back();
    v0 = values.back();
    t1 = times.front() + 1.0;
    v1 = values.front();
  } else {
    const auto i = static_cast<std::size_t>(it - times.begin());
    t0 = times[i - 1];
    v0 = values[i - 1];
    t1 = times[i];
    v1 = values[i];
  }
  const double theta = (tau - t0) / (t1 - t0);
  return (1.0 - theta) * v0 + theta * v1;
}

struct ScalarCurve {
  std::vector<double> times;
  std::vector<double> values;
  bool constant = false;
  double const_value = kNaN;

  double at(double tau) const {
    if (constant) return const_value;
    return interp_phase(times, values, tau);
  }
};

double json_or_nan(const nlohmann::json& block, const char* field) {
  if (!block.is_object() || !block.contains(field)) return kNaN;
  const auto& v = block.at(field);
  return v.is_number() ? v.get<double>() : kNaN;
}

ScalarCurve curve_from_json(const nlohmann::json& block, const char* field) {
  ScalarCurve out;
  if (block.is_null()) return out;
  if (!block.contains("t")) {
    out.constant = true;
    out.const_value = json_or_nan(block, field);
    return out;
  }
  const auto& times = block.at("t");
  const auto& values = block.at(field);
  const auto& flags = block.at("flags");
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (flags[j].get<std::string>() != "ok") continue;
    if (values[j].is_null()) continue;
    out.times.push_back(times[j].get<double>());
    out.values.push_back(values[j].get<double>());
  }
  return out;
}

std::ofstream open_csv(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string path = (fs::path(dir) / name).string();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  return out;
}

void emit_curves(const nlohmann::json& report, const std::string& out_dir) {
  if (report.at("experiment") == "enso") {
    auto out = open_csv(out_dir, "curves_enso.csv");
    out << "month,t,C,dCdt,A_e,Q_e,A_l,Q_l\n";
    for (const auto& row : report.at("curves").at("per_month")) {
      out << row.at("month").get<int>() << ","
          << format_double(row.at("t").get<double>());
      for (const char* key : {"C", "dCdt", "A_e", "Q_e", "A_l", "Q_l"}) {
        const auto& v = row.at(key);
        out << "," << (v.is_null() ? "nan" : format_double(v.get<double>()));
      }
      out << "\n";
    }
    return;
  }
  bool wrote = false;
  for (const auto& block : report.at("results")) {
    if (!block.contains("curves") || block.at("curves").is_null() ||
        !block.at("curves").contains("truth")) {
      continue;
    }
    const auto& curves = block.at("curves");
    std::ostringstream name;
    name << "curves_tf" << block.at("tf").get<long>() << ".csv";
    auto out = open_csv(out_dir, name.str());
    out << "t,truth_A,lim_A,cslim_A,ecslim_A,lcslim_A,"
           "truth_Q,lim_Q,cslim_Q,ecslim_Q,lcslim_Q\n";

    const auto& truth = curves.at("truth");
    const char* model_keys[3] = {"cslim", "ecslim", "lcslim"};
    ScalarCurve a_curves[3], q_curves[3];
    for (int k = 0; k < 3; ++k) {
      const auto& mb = curves.contains(model_keys[k]) ? curves.at(model_keys[k])
                                                      : nlohmann::json(nullptr);
      a_curves[k] = curve_from_json(mb, "A");
      q_curves[k] = curve_from_json(mb, "Q");
    }
    ScalarCurve lim_a, lim_q;
    lim_a.constant = lim_q.constant = true;
    if (curves.contains("lim")) {
      lim_a.const_value = json_or_nan(curves.at("lim"), "A");
      lim_q.const_value = json_or_nan(curves.at("lim"), "Q");
    }

    const auto& times = truth.at("t");
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double t = times[j].get<double>();
      out << format_double(t) << ","
          << format_double(truth.at("A")[j].get<double>()) << ","
          << format_double(lim_a.at(t));
      for (auto& c : a_curves) out << "," << format_double(c.at(t));
      out << "," << format_double(truth.at("Q")[j].get<double>()) << ","
          << format_double(lim_q.at(t));
      for (auto& c : q_curves) out << "," << format_double(c.at(t));
      out << "\n";
    }
    wrote = true;
  }
  if (!wrote) {
    throw UnknownKind("emit_plot_data: report carries no phase curves");
  }
}

void emit_boxes(const nlohmann::json& report, const std::string& out_dir) {
  auto out = open_csv(out_dir, "boxes.csv");
  out << "model,n,tf,metric,statistic,value\n";
  const char* stats[5] = {"p5", "p25", "p50", "p75", "p95"};
  const std::string experiment = report.at("experiment").get<std::string>();

  const auto write_summary = [&](const std::string& model, int dim, long tf,
                                 const std::string& metric,
                                 const nlohmann::json& summary) {
    for (const char* s : stats) {
      const auto& v = summary.at(s);
      out << model << "," << dim << "," << tf << "," << metric << "," << s << ","
          << (v.is_null() ? "nan" : format_double(v.get<double>())) << "\n";
    }
  };

  for (const auto& block : report.at("results")) {
    const long tf = block.at("tf").get<long>();
    const int dim = block.at("dim").get<int>();
    const auto& aggregates = block.at("aggregates");
    if (experiment == "convergence") {
      for (const auto& entry : aggregates) {
        const int m = entry.at("M").get<int>();
        write_summary("ecslim", dim, tf, "dA_M" + std::to_string(m), entry.at("dA"));
        write_summary("ecslim", dim, tf, "dQ_M" + std::to_string(m), entry.at("dQ"));
      }
      continue;
    }
    for (const char* model : kEstimators) {
      if (!aggregates.contains(model)) continue;
      const auto& agg = aggregates.at(model);
      for (const char* metric : {"E_A", "E_Q", "mean_A_err", "mean_Q_err"}) {
        write_summary(model, dim, tf, metric, agg.at(metric));
      }
      if (agg.contains("phase_A")) {
        write_summary(model, dim, tf, "phase_A", agg.at("phase_A"));
        write_summary(model, dim, tf, "phase_Q", agg.at("phase_Q"));
      }
    }
    if (aggregates.contains("filters")) {
      const auto& filt = aggregates.at("filters");
      for (const char* metric :
           {"E_A_raw", "E_A_ma", "E_A_lp", "E_A_gw", "E_Q_raw", "E_Q_ma",
            "E_Q_lp", "E_Q_gw"}) {
        write_summary("lcslim_filtered", dim, tf, metric, filt.at(metric));
      }
    }
  }
}

void emit_phases(const nlohmann::json& report, const std::string& out_dir) {
  if (report.at("experiment") != "oned") {
    throw UnknownKind("emit_plot_data: phase histograms need a oned report");
  }
  auto out = open_csv(out_dir, "phases.csv");
  out << "model,field,tf,bin_left,bin_right,count\n";
  constexpr int kBins = 100;
  for (const auto& block : report.at("results")) {
    const long tf = block.at("tf").get<long>();
    for (const char* model : {"cslim", "ecslim", "lcslim"}) {
      for (const char* field : {"A", "Q"}) {
        std::array<long, kBins> hist{};
        for (const auto& trial : block.at("trials")) {
          const auto& rec = trial.at("models").at(model);
          if (rec.at("failed").get<bool>()) continue;
          const auto& fit = rec.at(std::string("fit_") + field);
          if (fit.is_null() || fit.at("degenerate").get<bool>() ||
              fit.at("phase").is_null()) {
            continue;
          }
          const double phase = fit.at("phase").get<double>();
          int bin = static_cast<int>(std::floor((phase + 0.5) * kBins));
          bin = std::clamp(bin, 0, kBins - 1);
          ++hist[bin];
        }
        for (int b = 0; b < kBins; ++b) {
          const double left = -0.5 + static_cast<double>(b) / kBins;
          out << model << "," << field << "," << tf << "," << format_double(left)
              << "," << format_double(left + 1.0 / kBins) << "," << hist[b]
              << "\n";
        }
      }
    }
  }
}

}  // namespace

void emit_plot_data(const nlohmann::json& report, const std::string& kind,
                    const std::string& out_dir) {
  if (!report.is_object() || !report.contains("experiment")) {
    throw DataError("emit_plot_data: not an experiment report");
  }
  if (kind == "curves") {
    emit_curves(report, out_dir);
  } else if (kind == "boxes") {
    emit_boxes(report, out_dir);
  } else if (kind == "phases") {
    emit_phases(report, out_dir);
  } else {
    throw UnknownKind("emit_plot_data: unknown kind '" + kind + "'");
  }
}

}  // namespace cslim
