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

#include "jacprop/experiment.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace jacprop {
namespace {

constexpr double kRobotDt = 0.01;
constexpr double kLinearDt = 0.1;

// Per-run seed streams.
enum RunStream : std::uint64_t {
  kSystemStream = 100,
  kModelStream,
  kEpisodeStream,
  kValidationStream,
  kNominalStream,
  kSpectrumStream,
  kStudyInitStream,
};

template <typename Config, typename F>
void for_each_field(Config& c, F&& f) {
  f("schema_version", c.schema_version);
  f("name", c.name);
  f("benchmark", c.benchmark);
  f("objective", c.objective);
  f("tau", c.tau);
  f("tangent_reg", c.tangent_reg);
  f("weight_decay", c.weight_decay);
  f("dropout", c.dropout);
  f("epochs", c.epochs);
  f("dt_multiplier", c.dt_multiplier);
  f("dt", c.dt);
  f("state_dim", c.state_dim);
  f("input_dim", c.input_dim);
  f("hidden_width", c.hidden_width);
  f("hidden_depth", c.hidden_depth);
  f("ensemble_size", c.ensemble_size);
  f("num_perturbed", c.num_perturbed);
  f("perturbation_scale", c.perturbation_scale);
  f("resample_each_epoch", c.resample_each_epoch);
  f("prune_augmented", c.prune_augmented);
  f("noise_std", c.noise_std);
  f("T", c.T);
  f("episodes", c.episodes);
  f("n_runs", c.n_runs);
  f("base_seed", c.base_seed);
  f("output_dir", c.output_dir);
  f("arms", c.arms);
  f("input_pole", c.input_pole);
  f("input_std", c.input_std);
  f("initial_state_std", c.initial_state_std);
  f("ltv_lambda", c.ltv_lambda);
  f("ltv_prior", c.ltv_prior);
  f("learning_rate", c.learning_rate);
  f("minibatch", c.minibatch);
  f("standardize", c.standardize);
  f("divergence_factor", c.divergence_factor);
  f("checkpoints", c.checkpoints);
  f("spectrum_points", c.spectrum_points);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("config: " + message);
}

Vector nominal_state(const ExperimentConfig& cfg, Eigen::Index n) {
  if (cfg.benchmark == "robot") {
    Vector x = Vector::Zero(4);
    x(0) = -std::numbers::pi / 2.0;
    return x;
  }
  return Vector::Zero(n);
}

double initial_state_std(const ExperimentConfig& cfg) {
  if (cfg.initial_state_std >= 0.0) return cfg.initial_state_std;
  return cfg.benchmark == "robot" ? 0.1 : 1.0;
}

Trajectory held_out_trajectory(const ExperimentConfig& cfg,
                               const System& system, Seed seed) {
  const EpisodeConfig ep = make_episode_config(cfg, system);
  const Eigen::Index n = state_dim(system);
  Rng rng(derive_seed(seed, 0));
  const Vector x0 = ep.nominal_state + ep.initial_state_std * standard_normal(n, 1, rng);
  const Matrix inputs = lowpass_random_input(ep.length, input_dim(system),
                                             ep.input_pole, ep.input_sigma,
                                             derive_seed(seed, 1));
  return rollout(system, x0, inputs, ep.noise_std, derive_seed(seed, 2));
}

std::string arm_label(const ExperimentConfig& cfg) {
  return cfg.tangent_reg ? "tangent" : "baseline";
}

}  // namespace

void ExperimentConfig::validate() const {
  require(schema_version == kConfigSchemaVersion,
          "unsupported schema_version " + std::to_string(schema_version));
  require(!name.empty(), "name must not be empty");
  require(benchmark == "linear" || benchmark == "robot",
          "benchmark must be 'linear' or 'robot'");
  require(objective == "f" || objective == "g" || objective == "generalized" ||
              objective == "tau",
          "objective must be one of f, g, generalized, tau");
  require(std::isfinite(tau), "tau must be finite");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(epochs >= 0, "epochs must be >= 0");
  require(dt_multiplier == 0.2 || dt_multiplier == 1.0 || dt_multiplier == 5.0,
          "dt_multiplier must be 0.2, 1 or 5");
  require(dt >= 0.0, "dt must be >= 0");
  require(state_dim >= 1 && input_dim >= 1, "state_dim and input_dim must be >= 1");
  require(hidden_width >= 1 && hidden_depth >= 0,
          "hidden_width must be >= 1 and hidden_depth >= 0");
  require(ensemble_size >= 1, "ensemble_size must be >= 1");
  require(num_perturbed >= 0, "num_perturbed must be >= 0");
  require(perturbation_scale > 0.0, "perturbation_scale must be > 0");
  require(noise_std >= 0.0, "noise_std must be >= 0");
  require(T >= 3, "T must be >= 3");
  require(episodes >= 0, "episodes must be >= 0");
  require(n_runs >= 1, "n_runs must be >= 1");
  for (const auto& a : arms) {
    require(a == "baseline" || a == "tangent",
            "unknown arm '" + a + "' (expected baseline or tangent)");
  }
  require(input_pole >= 0.0 && input_pole < 1.0, "input_pole must lie in [0, 1)");
  require(input_std >= 0.0, "input_std must be >= 0");
  require(ltv_lambda >= 0.0 && ltv_prior >= 0.0,
          "ltv_lambda and ltv_prior must be >= 0");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(minibatch >= 1, "minibatch must be >= 1");
  require(divergence_factor > 0.0, "divergence_factor must be > 0");
  for (int c : checkpoints) require(c >= 1, "checkpoints must be >= 1");
  require(spectrum_points >= 1, "spectrum_points must be >= 1");
}

int ExperimentConfig::baseline_epochs() const {
  if (epochs > 0) return epochs;
  return objective == "f" ? 2000 : 1000;
}

double ExperimentConfig::effective_dt() const {
  const double base = dt > 0.0 ? dt : (benchmark == "robot" ? kRobotDt : kLinearDt);
  return base * dt_multiplier;
}

std::vector<std::string> ExperimentConfig::arm_names() const {
  if (!arms.empty()) return arms;
  return {arm_label(*this)};
}

ExperimentConfig ExperimentConfig::for_arm(const std::string& arm) const {
  ExperimentConfig out = *this;
  if (arm == "baseline") {
    out.tangent_reg = false;
  } else if (arm == "tangent") {
    out.tangent_reg = true;
  } else {
    throw ConfigError("config: unknown arm '" + arm + "'");
  }
  out.arms.clear();
  return out;
}

Json to_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  for_each_field(cfg, [&](const char* key, const auto& value) { j[key] = value; });
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for_each_field(cfg, [&](const char* key, auto& value) {
      if (it.key() != key) return;
      known = true;
      try {
        value = it.value().template get<std::decay_t<decltype(value)>>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: field '" + it.key() + "' has the wrong type");
      }
    });
    if (!known) throw ConfigError("config: unknown field '" + it.key() + "'");
  }
  cfg.validate();
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  // Comma lists for array fields.
  if (!value.is_array() && (key == "arms" || key == "checkpoints")) {
    Json list = Json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (key == "checkpoints") {
        list.push_back(std::stoi(item));
      } else {
        list.push_back(item);
      }
    }
    value = std::move(list);
  }
  Json j = to_json(cfg);
  if (!j.contains(key)) throw ConfigError("config: unknown field '" + key + "'");
  j[key] = value;
  cfg = experiment_config_from_json(j);
}

System make_system(const ExperimentConfig& cfg, Seed seed) {
  if (cfg.benchmark == "robot") {
    RobotParams p;
    p.dt = cfg.effective_dt();
    return p;
  }
  return random_linear_system(cfg.state_dim, cfg.input_dim, cfg.effective_dt(),
                              derive_seed(seed, kSystemStream));
}

EpisodeConfig make_episode_config(const ExperimentConfig& cfg,
                                  const System& system) {
  EpisodeConfig ep;
  ep.length = cfg.T;
  ep.input_pole = cfg.input_pole;
  ep.input_sigma = cfg.input_std * unit_variance_sigma(cfg.input_pole);
  ep.noise_std = cfg.noise_std;
  ep.nominal_state = nominal_state(cfg, state_dim(system));
  ep.initial_state_std = initial_state_std(cfg);
  ep.tangent_regularization = cfg.tangent_reg;
  ep.baseline_epochs = cfg.baseline_epochs();
  ep.prune_augmented = cfg.prune_augmented;
  ep.ltv.lambda = cfg.ltv_lambda;
  ep.ltv.prior_scale = cfg.ltv_prior;
  ep.perturbation.scale = cfg.perturbation_scale;
  ep.perturbation.num_perturbed = cfg.num_perturbed;
  ep.perturbation.resample_each_epoch = cfg.resample_each_epoch;
  ep.train.step_size = cfg.learning_rate;
  ep.train.weight_decay = cfg.weight_decay;
  ep.train.minibatch = cfg.minibatch;
  ep.train.standardize = cfg.standardize;
  return ep;
}

Ensemble make_model(const ExperimentConfig& cfg, const System& system,
                    Seed seed) {
  const Eigen::Index n = state_dim(system), m = input_dim(system);
  ObjectiveForm form;
  if (cfg.objective == "f") {
    form = ObjectiveForm::f();
  } else if (cfg.objective == "g") {
    form = ObjectiveForm::g();
  } else if (cfg.objective == "tau") {
    form = ObjectiveForm::tau_shift(Vector::Constant(n, cfg.tau));
  } else {
    // Nominal model: least-squares LTI fit on a separate identification
    // rollout.
    const Trajectory ident =
        held_out_trajectory(cfg, system, derive_seed(seed, kNominalStream));
    const JacobianMatrix lti = fit_lti(ident, cfg.ltv_prior);
    form = ObjectiveForm::generalized(lti.state_block(), lti.input_block());
  }
  const std::vector<Eigen::Index> hidden(static_cast<std::size_t>(cfg.hidden_depth),
                                         cfg.hidden_width);
  return make_ensemble(n, m, cfg.ensemble_size, hidden, form,
                       derive_seed(seed, kModelStream), cfg.dropout);
}

RunOutput run_experiment(const ExperimentConfig& cfg, Seed seed) {
  cfg.validate();
  RunOutput out;
  out.system = make_system(cfg, seed);
  const EpisodeConfig ep = make_episode_config(cfg, out.system);
  const Ensemble initial = make_model(cfg, out.system, seed);
  out.episodes = episode_loop(out.system, initial, cfg.episodes, ep,
                              derive_seed(seed, kEpisodeStream));
  out.ensemble = out.episodes.ensemble;
  out.validation =
      held_out_trajectory(cfg, out.system, derive_seed(seed, kValidationStream));

  MetricRecord& rec = out.record;
  rec.seed = seed;
  rec.arm = arm_label(cfg);
  rec.objective = cfg.objective;
  rec.tangent = cfg.tangent_reg;
  rec.weight_decay = cfg.weight_decay;
  rec.dropout = cfg.dropout;
  rec.prediction_rmse = prediction_error(out.ensemble, out.validation);
  const SimulationResult sim =
      simulation_error(out.ensemble, out.validation, cfg.divergence_factor);
  rec.simulation_rmse = sim.rmse;
  rec.diverged = sim.diverged;
  rec.jacobian_error = jacobian_error(out.ensemble, out.system, out.validation);
  for (const EpisodeMetrics& m : out.episodes.metrics) {
    if (m.aborted) {
      if (!rec.note.empty()) rec.note += "; ";
      rec.note += "episode " + std::to_string(m.episode) + " aborted: " + m.note;
    }
  }
  return out;
}

MetricRecord run_single(const ExperimentConfig& cfg, int run_id, Seed seed) {
  MetricRecord rec = run_experiment(cfg, seed).record;
  rec.run_id = run_id;
  return rec;
}

std::vector<ArmResult> run_arms(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  std::vector<ArmResult> out;
  for (const std::string& arm : cfg.arm_names()) {
    ArmResult res;
    res.arm = arm;
    res.config = cfg.for_arm(arm);
    const ExperimentConfig& arm_cfg = res.config;
    res.records = monte_carlo(
        [&arm_cfg](int run_id, Seed seed) { return run_single(arm_cfg, run_id, seed); },
        cfg.n_runs, jobs, cfg.base_seed);
    for (MetricRecord& r : res.records) r.arm = arm;
    res.summary = summarize(arm, res.records);
    out.push_back(std::move(res));
  }
  return out;
}

void write_arm_outputs(const std::filesystem::path& root,
                       const std::vector<ArmResult>& arms) {
  for (const ArmResult& arm : arms) {
    const auto dir = root / arm.config.name / arm.arm;
    std::ostringstream csv;
    write_records_csv(csv, arm.records);
    write_text_file(dir / "results.csv", csv.str());
    write_json_file(dir / "summary.json", to_json(arm.summary));
    write_json_file(dir / "config.resolved.json", to_json(arm.config));
    Json timing = Json::array();
    for (const MetricRecord& r : arm.records) {
      timing.push_back({{"run_id", r.run_id}, {"wall_time", r.wall_time}});
    }
    write_json_file(dir / "timing.json", timing);
  }
}

std::vector<ActivationRow> activation_study(const ExperimentConfig& cfg,
                                            int jobs) {
  cfg.validate();
  if (cfg.checkpoints.empty()) throw ConfigError("config: checkpoints must not be empty");
  int last = 0;
  for (int c : cfg.checkpoints) last = std::max(last, c);
  const std::size_t acts = kStudiedActivations.size();
  const std::size_t cps = cfg.checkpoints.size();
  // [activation][run][checkpoint]
  std::vector<double> log_err(acts * cfg.n_runs * cps,
                              std::numeric_limits<double>::quiet_NaN());

  parallel_for(cfg.n_runs, jobs, [&](int run) {
    const Seed seed = cfg.base_seed + static_cast<Seed>(run);
    const System system = make_system(cfg, seed);
    const Trajectory train_traj =
        held_out_trajectory(cfg, system, derive_seed(seed, kEpisodeStream));
    const Trajectory val =
        held_out_trajectory(cfg, system, derive_seed(seed, kValidationStream));
    const Dataset data = transitions(train_traj);
    // Reuse make_model for the objective form; only member 0's layout matters.
    ExperimentConfig single = cfg;
    single.ensemble_size = 1;
    const MLPModel shape = make_model(single, system, seed).members.front();
    const std::vector<Eigen::Index> hidden(static_cast<std::size_t>(cfg.hidden_depth),
                                           cfg.hidden_width);
    for (std::size_t a = 0; a < acts; ++a) {
      const MLPModel init =
          make_mlp(shape.state_dim, shape.input_dim, hidden, kStudiedActivations[a],
                   shape.objective, derive_seed(seed, kStudyInitStream), cfg.dropout);
      TrainConfig tc = make_episode_config(cfg, system).train;
      tc.epochs = last;
      tc.seed = derive_seed(seed, kStudyInitStream + 1);
      TrainHooks hooks;
      hooks.after_epoch = [&](int epoch, const MLPModel& model) {
        for (std::size_t c = 0; c < cps; ++c) {
          if (cfg.checkpoints[c] == epoch + 1) {
            log_err[(a * cfg.n_runs + run) * cps + c] =
                std::log(prediction_error(model, val));
          }
        }
      };
      try {
        train(init, data, tc, hooks);
      } catch (const DivergenceError&) {
        // Checkpoints past the divergence stay NaN.
      }
    }
  });

  std::vector<ActivationRow> rows;
  rows.reserve(log_err.size());
  for (std::size_t a = 0; a < acts; ++a) {
    for (int run = 0; run < cfg.n_runs; ++run) {
      for (std::size_t c = 0; c < cps; ++c) {
        rows.push_back({kStudiedActivations[a], cfg.checkpoints[c], run,
                        log_err[(a * cfg.n_runs + run) * cps + c]});
      }
    }
  }
  return rows;
}

void write_activation_csv(std::ostream& out,
                          const std::vector<ActivationRow>& rows) {
  out << "activation,epoch,run,log_error\r\n";
  for (const ActivationRow& r : rows) {
    out << to_string(r.activation) << ',' << r.epoch << ',' << r.run << ','
        << format_double(r.log_error) << "\r\n";
  }
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("JACPROP_OUT"); env != nullptr && *env != '\0') {
    return env;
  }
  return "results";
}

}  // namespace jacprop
