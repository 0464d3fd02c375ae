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

// Experiment configuration and the runs behind the command-line tool. One
// run builds a benchmark, trains an ensemble through the episode loop and
// scores it on a held-out trajectory; arms pair runs by seed.

#ifndef JACPROP_EXPERIMENT_H_
#define JACPROP_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jacprop/benchmarks.h"
#include "jacprop/evaluation.h"
#include "jacprop/io.h"
#include "jacprop/neural.h"
#include "jacprop/tangent.h"

namespace jacprop {

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name = "experiment";
  std::string benchmark = "robot";  // linear | robot
  std::string objective = "g";      // f | g | generalized | tau
  double tau = 1.0;                 // diagonal of the tau-shift form
  bool tangent_reg = true;
  double weight_decay = 0.0;
  double dropout = 0.0;
  int epochs = 0;  // baseline epochs; 0 selects 2000 for f, 1000 otherwise
  double dt_multiplier = 1.0;  // 0.2, 1 or 5
  double dt = 0.0;             // 0 selects 0.01 (robot) or 0.1 (linear)
  int state_dim = 10;          // linear benchmark only
  int input_dim = 1;           // linear benchmark only
  int hidden_width = 20;
  int hidden_depth = 1;
  int ensemble_size = 4;
  int num_perturbed = 1;
  double perturbation_scale = 0.1;
  bool resample_each_epoch = false;
  bool prune_augmented = false;
  double noise_std = 0.0;
  int T = 200;
  int episodes = 1;
  int n_runs = 35;
  std::uint64_t base_seed = 1;
  std::string output_dir;  // empty selects $JACPROP_OUT, then "results"
  std::vector<std::string> arms;  // "baseline", "tangent"; empty runs one arm
  double input_pole = 0.9;
  double input_std = 1.0;
  double initial_state_std = -1.0;  // < 0 selects 0.1 (robot) or 1 (linear)
  double ltv_lambda = 10.0;
  double ltv_prior = 1e-3;
  double learning_rate = 1e-3;
  int minibatch = 64;
  bool standardize = true;
  double divergence_factor = kDefaultDivergenceFactor;
  std::vector<int> checkpoints = {20, 500, 1500};
  int spectrum_points = 50;

  void validate() const;
  int baseline_epochs() const;
  double effective_dt() const;
  /// Arm names to run: `arms`, or the single arm implied by tangent_reg.
  std::vector<std::string> arm_names() const;
  /// Copy with the arm's settings applied.
  ExperimentConfig for_arm(const std::string& arm) const;
};

Json to_json(const ExperimentConfig& cfg);
/// Strict: unknown fields and out-of-range values raise ConfigError.
ExperimentConfig experiment_config_from_json(const Json& j);
/// Applies `key=value` overrides; the value is parsed as JSON when possible.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

System make_system(const ExperimentConfig& cfg, Seed seed);
EpisodeConfig make_episode_config(const ExperimentConfig& cfg,
                                  const System& system);
Ensemble make_model(const ExperimentConfig& cfg, const System& system,
                    Seed seed);

struct RunOutput {
  MetricRecord record;
  System system;
  Ensemble ensemble;
  Trajectory validation;
  EpisodeResult episodes;
};

RunOutput run_experiment(const ExperimentConfig& cfg, Seed seed);
MetricRecord run_single(const ExperimentConfig& cfg, int run_id, Seed seed);

struct ArmResult {
  std::string arm;
  ExperimentConfig config;
  std::vector<MetricRecord> records;
  ArmSummary summary;
};

/// Every arm over the same seeds base_seed .. base_seed + n_runs - 1.
std::vector<ArmResult> run_arms(const ExperimentConfig& cfg, int jobs);

/// <root>/<name>/<arm>/{results.csv, summary.json, config.resolved.json,
/// timing.json}
void write_arm_outputs(const std::filesystem::path& root,
                       const std::vector<ArmResult>& arms);

struct ActivationRow {
  Activation activation = Activation::tanh;
  int epoch = 0;
  int run = 0;
  double log_error = 0.0;  // natural log of validation one-step RMSE
};

/// Trains a single network per activation and run on shared data, recording
/// the validation prediction error at every checkpoint epoch. Rows are
/// ordered by activation, then run, then epoch.
std::vector<ActivationRow> activation_study(const ExperimentConfig& cfg,
                                            int jobs);
void write_activation_csv(std::ostream& out,
                          const std::vector<ActivationRow>& rows);

std::filesystem::path default_output_root();

}  // namespace jacprop

#endif  // JACPROP_EXPERIMENT_H_
