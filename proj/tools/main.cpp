// Command line front end: path simulation, single-record fits, the batch
// experiments, and plot-data extraction from their reports.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cslim/enso.hpp"
#include "cslim/experiments.hpp"
#include "cslim/io.hpp"
#include "cslim/models.hpp"
#include "cslim/random.hpp"
#include "cslim/simulate.hpp"
#include "cslim/version.hpp"

namespace fs = std::filesystem;
using namespace cslim;

namespace {

// Exit codes: 0 ok, 2 config or usage, 3 data or numerical failure,
// 4 failure budget exceeded.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitBudget = 4;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  int trials = 0;
  int threads = -1;
  std::string out_dir;
  bool paper_scale = false;
  std::vector<long> tf;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* trials_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* tf_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_tf) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  opts.seed_opt = cmd->add_option("--seed", opts.seed, "master RNG seed");
  opts.trials_opt = cmd->add_option("--trials", opts.trials, "trial count");
  opts.threads_opt =
      cmd->add_option("--threads", opts.threads, "worker threads (0 = auto)");
  opts.out_opt = cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_flag("--paper-scale", opts.paper_scale,
                "full-size trial counts and record lengths");
  if (with_tf) {
    opts.tf_opt = cmd->add_option("--tf", opts.tf,
                                  "record lengths in periods (repeatable)");
  }
}

ExperimentConfig build_config(const std::string& experiment,
                              const CommonOpts& opts) {
  ExperimentConfig config;
  if (!opts.config_path.empty()) {
    config = config_from_json(read_json_file(opts.config_path));
  }
  config.experiment = experiment;
  if (opts.paper_scale) {
    config.paper_scale = true;
    apply_paper_scale(config);
  }
  if (opts.seed_opt && opts.seed_opt->count() > 0) config.master_seed = opts.seed;
  if (opts.trials_opt && opts.trials_opt->count() > 0) config.trials = opts.trials;
  if (opts.threads_opt && opts.threads_opt->count() > 0) {
    config.threads = opts.threads;
  }
  if (opts.out_opt && opts.out_opt->count() > 0) config.out_dir = opts.out_dir;
  if (opts.tf_opt && opts.tf_opt->count() > 0) config.tf_list = opts.tf;
  return config;
}

int finish_experiment(const nlohmann::json& report,
                      const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  const std::string path =
      (fs::path(config.out_dir) / ("report_" + config.experiment + ".json"))
          .string();
  write_json_file(report, path);
  std::cout << "wrote " << path << "\n";
  if (report.value("failure_budget_exceeded", false)) {
    std::cerr << "failure budget exceeded\n";
    return kExitBudget;
  }
  return kExitOk;
}

int dispatch(const std::string& experiment, const CommonOpts& opts,
             const std::function<void(ExperimentConfig&)>& tweak) {
  ExperimentConfig config = build_config(experiment, opts);
  if (tweak) tweak(config);
  validate(config);
  nlohmann::json report;
  if (experiment == "oned") report = run_oned(config);
  else if (experiment == "nd") report = run_nd(config);
  else if (experiment == "convergence") report = run_convergence(config);
  else report = run_enso(config);
  return finish_experiment(report, config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"periodic linear stochastic systems: simulation and inference"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "sample one path, write it as CSV");
  int sim_dim = 1;
  double sim_dt = 0.002;
  long sim_tf = 10;
  long sim_stride = 1;
  long sim_burn = 0;
  std::uint64_t sim_seed = 12345;
  double sim_mean_a = -1.0, sim_int_a = 0.2, sim_mean_q = 1.0, sim_int_q = 0.3;
  std::string sim_out = ".";
  sim->add_option("--dim", sim_dim, "state dimension")->check(CLI::Range(1, 6));
  sim->add_option("--dt", sim_dt, "integration step");
  sim->add_option("--tf", sim_tf, "record length in periods");
  sim->add_option("--stride", sim_stride, "subsampling stride");
  sim->add_option("--burn-in", sim_burn, "discarded leading periods");
  sim->add_option("--seed", sim_seed, "master RNG seed");
  sim->add_option("--mean-dynamics", sim_mean_a, "mean dynamics (dim 1)");
  sim->add_option("--dyn-intensity", sim_int_a, "dynamics cycle intensity");
  sim->add_option("--mean-diffusion", sim_mean_q, "mean diffusion (dim 1)");
  sim->add_option("--diff-intensity", sim_int_q, "diffusion cycle intensity");
  sim->add_option("--out", sim_out, "output directory");

  // fit
  auto* fit = app.add_subcommand("fit", "fit one estimator to a path CSV");
  std::string fit_input, fit_estimator = "ecslim", fit_out = ".";
  int fit_period = 100, fit_intervals = 10, fit_lag = 10;
  fit->add_option("--input", fit_input, "path CSV")->required();
  fit->add_option("--estimator", fit_estimator, "lim | cslim | ecslim | lcslim")
      ->check(CLI::IsMember({"lim", "cslim", "ecslim", "lcslim"}));
  fit->add_option("--period", fit_period, "samples per period");
  fit->add_option("--intervals", fit_intervals, "subintervals M");
  fit->add_option("--lag", fit_lag, "lag k in subsampled steps");
  fit->add_option("--out", fit_out, "output directory");

  // experiments
  CommonOpts oned_opts, nd_opts, conv_opts, enso_opts;
  auto* oned = app.add_subcommand("oned", "1-D cycle reconstruction study");
  add_common(oned, oned_opts, true);
  auto* nd = app.add_subcommand("nd", "dimension sweep with random systems");
  add_common(nd, nd_opts, true);
  std::vector<int> nd_dims;
  auto* nd_dims_opt = nd->add_option("--dims", nd_dims, "state dimensions");
  auto* conv =
      app.add_subcommand("convergence", "subinterval refinement comparison");
  add_common(conv, conv_opts, true);
  std::vector<int> conv_mlist;
  auto* conv_m_opt =
      conv->add_option("--mlist", conv_mlist, "ascending subinterval counts");
  auto* enso = app.add_subcommand("enso", "monthly index case study");
  add_common(enso, enso_opts, false);
  std::string enso_data;
  int enso_members = 0;
  double enso_threshold = 0.0;
  int enso_window = 0;
  std::string enso_polarity;
  int enso_years = -1;
  auto* enso_data_opt = enso->add_option("--data", enso_data, "monthly index CSV");
  auto* enso_members_opt =
      enso->add_option("--members", enso_members, "ensemble size");
  auto* enso_thr_opt =
      enso->add_option("--threshold", enso_threshold, "event threshold");
  auto* enso_win_opt =
      enso->add_option("--window", enso_window, "dominance window in months");
  auto* enso_pol_opt =
      enso->add_option("--polarity", enso_polarity, "absolute | signed")
          ->check(CLI::IsMember({"absolute", "signed"}));
  auto* enso_years_opt =
      enso->add_option("--regen-years", enso_years, "regenerated record length");

  // plotdata
  auto* plot = app.add_subcommand("plotdata", "extract plot tables from a report");
  std::string plot_report, plot_kind, plot_out = ".";
  plot->add_option("--report", plot_report, "experiment report JSON")->required();
  plot->add_option("--kind", plot_kind, "curves | boxes | phases")->required();
  plot->add_option("--out", plot_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (sim->parsed()) {
      SystemSpec spec = [&] {
        RandomStream stream(sim_seed, 0);
        if (sim_dim == 1) {
          Matrix a(1, 1), q(1, 1);
          a << sim_mean_a;
          q << sim_mean_q;
          return sinusoidal_system(a, sim_int_a, q, sim_int_q);
        }
        const auto [a, q] = random_stable_system(sim_dim, stream);
        return sinusoidal_system(a, sim_int_a, q, sim_int_q);
      }();
      RandomStream stream(sim_seed, 1);
      TimeSeries path = sample_path(spec, sim_dt, sim_tf, stream,
                                    Vector::Zero(sim_dim), sim_burn);
      if (sim_stride > 1) path = subsample(path, sim_stride);
      fs::create_directories(sim_out);
      const std::string out = (fs::path(sim_out) / "path.csv").string();
      write_timeseries_csv(path, out);
      std::cout << "wrote " << out << "\n";
      return kExitOk;
    }

    if (fit->parsed()) {
      const TimeSeries record = read_timeseries_csv(fit_input);
      PeriodicModel model;
      if (fit_estimator == "lim") {
        const LimEstimate est = classical_lim(record, fit_lag);
        model.estimator = "lim";
        model.intervals = 1;
        model.lag_steps = fit_lag;
        model.dt = record.dt;
        model.times = {0.0};
        model.dynamics = {est.dynamics};
        model.diffusions = {est.diffusion};
        model.flags = {PhaseFlag::ok};
      } else if (fit_estimator == "cslim") {
        model = cs_lim(record, fit_period, fit_intervals, fit_lag,
                       CsVariant::original);
      } else if (fit_estimator == "ecslim") {
        model = cs_lim(record, fit_period, fit_intervals, fit_lag, CsVariant::e);
      } else {
        model = l_cs_lim(record, fit_period);
      }
      fs::create_directories(fit_out);
      const std::string json_path = (fs::path(fit_out) / "model.json").string();
      write_model_json(model, json_path);
      write_model_csv(model, (fs::path(fit_out) / "model.csv").string());
      std::cout << "wrote " << json_path << "\n";
      return kExitOk;
    }

    if (oned->parsed()) return dispatch("oned", oned_opts, nullptr);
    if (nd->parsed()) {
      return dispatch("nd", nd_opts, [&](ExperimentConfig& c) {
        if (nd_dims_opt->count() > 0) c.dims = nd_dims;
      });
    }
    if (conv->parsed()) {
      return dispatch("convergence", conv_opts, [&](ExperimentConfig& c) {
        if (conv_m_opt->count() > 0) c.m_list = conv_mlist;
      });
    }
    if (enso->parsed()) {
      return dispatch("enso", enso_opts, [&](ExperimentConfig& c) {
        if (enso_data_opt->count() > 0) c.data_path = enso_data;
        if (enso_members_opt->count() > 0) c.members = enso_members;
        if (enso_thr_opt->count() > 0) c.eep_threshold = enso_threshold;
        if (enso_win_opt->count() > 0) c.eep_window = enso_window;
        if (enso_pol_opt->count() > 0) c.polarity = enso_polarity;
        if (enso_years_opt->count() > 0) c.regen_years = enso_years;
      });
    }
    if (plot->parsed()) {
      emit_plot_data(read_json_file(plot_report), plot_kind, plot_out);
      std::cout << "wrote plot tables to " << plot_out << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kExitData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
