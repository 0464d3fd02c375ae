// Copyright 2026 The jacprop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jacprop/cli.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "jacprop/benchmarks.h"
#include "jacprop/experiment.h"
#include "jacprop/io.h"
#include "jacprop/ltv.h"

namespace jacprop {
namespace {

// Options shared by the subcommands that take an experiment configuration.
struct ConfigOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string arms;
  int n_runs = 0;
  long long base_seed = -1;
  std::string out;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "JSON experiment configuration");
    app->add_option("--set", overrides, "Override a field, key=value")
        ->take_all();
    app->add_option("--n-runs", n_runs, "Monte-Carlo runs per arm");
    app->add_option("--base-seed", base_seed, "Seed of run 0");
    app->add_option("-o,--out", out, "Output root (default $JACPROP_OUT or ./results)");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_file.empty()) cfg = experiment_config_from_json(read_json_file(config_file));
    for (const auto& o : overrides) apply_override(cfg, o);
    if (!arms.empty()) apply_override(cfg, "arms=" + arms);
    if (n_runs > 0) cfg.n_runs = n_runs;
    if (base_seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(base_seed);
    if (!out.empty()) cfg.output_dir = out;
    cfg.validate();
    return cfg;
  }
};

std::filesystem::path output_root(const ExperimentConfig& cfg) {
  return cfg.output_dir.empty() ? default_output_root()
                                : std::filesystem::path(cfg.output_dir);
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

int cmd_gen_linear(int n, int m, double dt, long long seed, const std::string& out_path,
                   std::ostream& out, std::ostream& err) {
  if (n < 1 || m < 1) {
    err << "gen-linear: --n and --m must be >= 1\n";
    return kExitUsage;
  }
  if (!(dt > 0.0)) {
    err << "gen-linear: --dt must be > 0\n";
    return kExitUsage;
  }
  const LinearSystem sys = random_linear_system(n, m, dt, static_cast<Seed>(seed));
  const double target = std::exp(-dt * dt);
  double deviation = 0.0;
  for (const Complex& l : eigenvalues(sys.a)) {
    deviation = std::max(deviation, std::abs(std::abs(l) - target));
  }
  Json j = to_json(sys);
  j["seed"] = seed;
  const std::filesystem::path path =
      out_path.empty() ? default_output_root() / "linear_system.json"
                       : std::filesystem::path(out_path);
  write_json_file(path, j);
  out << "wrote " << path.string() << "\n";
  out << "max |modulus - exp(-dt^2)| = " << deviation << "\n";
  if (deviation > 1e-9) {
    err << "gen-linear: spectral deviation exceeds 1e-9\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_run(const ConfigOptions& opts, int jobs, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = opts.resolve();
  const auto arms = run_arms(cfg, jobs);
  const auto root = output_root(cfg);
  write_arm_outputs(root, arms);
  int failed = 0;
  for (const ArmResult& a : arms) {
    const ArmSummary& s = a.summary;
    out << a.arm << ": runs=" << s.runs << " failed=" << s.failed
        << " diverged=" << s.diverged
        << " pred_rmse(median)=" << fmt(s.prediction_rmse.median)
        << " sim_rmse(median)=" << fmt(s.simulation_rmse.median)
        << " jac_err(median)=" << fmt(s.jacobian_error.median) << "\n";
    for (const MetricRecord& r : a.records) {
      if (r.failed) {
        ++failed;
        err << a.arm << " run " << r.run_id << " failed: " << r.note << "\n";
      }
    }
  }
  out << "results in " << (root / cfg.name).string() << "\n";
  return failed > 0 ? kExitFailure : kExitOk;
}

int cmd_activation_study(const ConfigOptions& opts, int jobs, std::ostream& out) {
  const ExperimentConfig cfg = opts.resolve();
  const auto rows = activation_study(cfg, jobs);
  const auto path = output_root(cfg) / cfg.name / "activation_study.csv";
  std::ostringstream csv;
  write_activation_csv(csv, rows);
  write_text_file(path, csv.str());

  int last = 0;
  for (int c : cfg.checkpoints) last = std::max(last, c);
  std::map<Activation, double> medians;
  for (Activation a : kStudiedActivations) {
    std::vector<double> v;
    for (const auto& r : rows) {
      if (r.activation == a && r.epoch == last && std::isfinite(r.log_error)) {
        v.push_back(r.log_error);
      }
    }
    medians[a] = quantile(v, 0.5);
    out << to_string(a) << ": median log error at epoch " << last << " = "
        << fmt(medians[a]) << "\n";
  }
  const double worst_smooth =
      std::max(medians[Activation::tanh], medians[Activation::elu]);
  const bool relu_worse = medians[Activation::relu] > worst_smooth &&
                          medians[Activation::leaky_relu] > worst_smooth;
  out << "relu and leaky_relu medians " << (relu_worse ? "exceed" : "do not exceed")
      << " the tanh/elu medians\n";
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_spectrum(const ConfigOptions& opts, int points, std::ostream& out) {
  ExperimentConfig cfg = opts.resolve();
  if (points > 0) cfg.spectrum_points = points;
  const RunOutput run = run_experiment(cfg, cfg.base_seed);
  const SpectrumReport report =
      spectrum_report(run.ensemble, run.system, run.validation, cfg.spectrum_points,
                      derive_seed(cfg.base_seed, 105));
  const auto path = output_root(cfg) / cfg.name / "spectrum.csv";
  std::ostringstream csv;
  write_spectrum_csv(csv, report);
  write_text_file(path, csv.str());
  for (const auto& note : report.notes) out << "skipped " << note << "\n";
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_fit_ltv(const std::string& traj_path, double lambda, double prior,
                const std::string& out_path, std::ostream& out) {
  const Trajectory traj = load_trajectory(traj_path);
  LTVFitConfig cfg;
  cfg.lambda = lambda;
  cfg.prior_scale = prior;
  const LTVModel model = fit_ltv(traj, cfg);
  const std::filesystem::path path =
      out_path.empty() ? std::filesystem::path(traj_path + ".ltv.json")
                       : std::filesystem::path(out_path);
  write_json_file(path, to_json(model));
  out << "objective = " << fmt(ltv_objective(traj, model, cfg)) << "\n";
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_simulate(const ConfigOptions& opts, const std::string& system_file,
                 const std::string& out_path, std::ostream& out) {
  const ExperimentConfig cfg = opts.resolve();
  const Seed seed = cfg.base_seed;
  const System system = system_file.empty() ? make_system(cfg, seed)
                                            : system_from_json(read_json_file(system_file));
  ExperimentConfig shaped = cfg;
  if (std::holds_alternative<RobotParams>(system)) shaped.benchmark = "robot";
  const EpisodeConfig ep = make_episode_config(shaped, system);
  const Eigen::Index n = state_dim(system), m = input_dim(system);
  const Vector nominal = ep.nominal_state.size() == n ? ep.nominal_state : Vector::Zero(n);
  Rng rng(derive_seed(seed, 0));
  const Vector x0 = nominal + ep.initial_state_std * standard_normal(n, 1, rng);
  const Matrix inputs = lowpass_random_input(ep.length, m, ep.input_pole,
                                             ep.input_sigma, derive_seed(seed, 1));
  const Trajectory traj = rollout(system, x0, inputs, ep.noise_std, derive_seed(seed, 2));
  const std::filesystem::path path =
      out_path.empty() ? output_root(cfg) / "trajectory.csv" : std::filesystem::path(out_path);
  save_trajectory(path, traj, to_json(system), seed, ep.noise_std);
  out << "wrote " << path.string() << " (" << traj.length() << " steps)\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Neural dynamics models with tangent-space regularization"};
  app.require_subcommand(1);

  int jobs = 1;
  app.add_option("-j,--jobs", jobs, "Parallel Monte-Carlo runs")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-linear", "Generate a random stable linear system");
  int gen_n = 10, gen_m = 1;
  double gen_dt = 0.1;
  long long gen_seed = 1;
  std::string gen_out;
  gen->add_option("--n", gen_n, "State dimension");
  gen->add_option("--m", gen_m, "Input dimension");
  gen->add_option("--dt", gen_dt, "Sample time");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("-o,--out", gen_out, "Output JSON file");

  ConfigOptions run_opts;
  auto* run = app.add_subcommand("run", "Run the configured Monte-Carlo experiment");
  run_opts.attach(run);
  run->add_option("--arms", run_opts.arms, "Comma-separated arms: baseline,tangent");
  run->add_option("-j,--jobs", jobs, "Parallel Monte-Carlo runs")->check(CLI::PositiveNumber);

  ConfigOptions act_opts;
  auto* act = app.add_subcommand("activation-study", "Compare activation functions");
  act_opts.attach(act);
  act->add_option("-j,--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  ConfigOptions spec_opts;
  int spec_points = 0;
  auto* spec = app.add_subcommand("spectrum", "Learned vs true Jacobian eigenvalues");
  spec_opts.attach(spec);
  spec->add_option("--points", spec_points, "Sampled state-space points");

  auto* fit = app.add_subcommand("fit-ltv", "Fit an LTV model to a trajectory CSV");
  std::string fit_traj, fit_out;
  double fit_lambda = 10.0, fit_prior = 1e-3;
  fit->add_option("-t,--traj", fit_traj, "Trajectory CSV")->required();
  fit->add_option("--lambda", fit_lambda, "Smoothness weight");
  fit->add_option("--prior", fit_prior, "Ridge weight");
  fit->add_option("-o,--out", fit_out, "Output JSON file");

  ConfigOptions sim_opts;
  std::string sim_system, sim_out;
  auto* sim = app.add_subcommand("simulate", "Roll out a benchmark with exploration input");
  sim_opts.attach(sim);
  sim->add_option("--system", sim_system, "System JSON from gen-linear");
  sim->add_option("--traj-out", sim_out, "Trajectory CSV path");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_linear(gen_n, gen_m, gen_dt, gen_seed, gen_out, out, err);
    if (run->parsed()) return cmd_run(run_opts, jobs, out, err);
    if (act->parsed()) return cmd_activation_study(act_opts, jobs, out);
    if (spec->parsed()) return cmd_spectrum(spec_opts, spec_points, out);
    if (fit->parsed()) return cmd_fit_ltv(fit_traj, fit_lambda, fit_prior, fit_out, out);
    if (sim->parsed()) return cmd_simulate(sim_opts, sim_system, sim_out, out);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace jacprop
