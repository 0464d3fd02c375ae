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

// Sampled Jacobian propagation: training data is augmented with Gaussian
// perturbations of the recorded (x, u) whose targets come from an LTV
// teacher fit along the same trajectory, and the episode loop that
// interleaves rollouts, teacher fits and model updates.

#ifndef JACPROP_TANGENT_H_
#define JACPROP_TANGENT_H_

#include <functional>
#include <string>
#include <vector>

#include "jacprop/benchmarks.h"
#include "jacprop/ltv.h"
#include "jacprop/neural.h"
#include "jacprop/types.h"

namespace jacprop {

struct PerturbationConfig {
  double scale = 0.1;  // std multiplier on the per-dimension data std
  int num_perturbed = 1;
  bool resample_each_epoch = false;
  Seed seed = 0;

  void validate() const;
};

/// One perturbed copy of a trajectory's transitions.
struct Perturbation {
  Matrix dx;  // n x (T - 1)
  Matrix du;  // m x (T - 1)
};

/// cfg.num_perturbed draws of eps_x ~ N(0, scale^2 diag Sigma_x) and
/// eps_u ~ N(0, scale^2 diag Sigma_u), Sigma the per-dimension sample
/// variances of the trajectory.
std::vector<Perturbation> sample_perturbations(const Trajectory& traj,
                                               const PerturbationConfig& cfg);

/// Applies explicit perturbations: x~ = x_t + dx, u~ = u_t + du,
/// x~+ = A_t x~ + B_t u~. Copies are laid out one after another.
Dataset augment_with(const Trajectory& traj, const LTVModel& teacher,
                     const std::vector<Perturbation>& perturbations);

/// sample_perturbations followed by augment_with; num_perturbed (T - 1)
/// samples.
Dataset perturb_trajectory(const Trajectory& traj, const LTVModel& teacher,
                           const PerturbationConfig& cfg);

struct EpisodeConfig {
  Eigen::Index length = 200;
  double input_pole = 0.9;
  double input_sigma = 0.0;  // 0 selects unit_variance_sigma(input_pole)
  double noise_std = 0.0;
  Vector nominal_state;  // empty selects the origin
  double initial_state_std = 0.0;
  bool tangent_regularization = true;
  int baseline_epochs = 1000;  // halved under tangent regularization
  bool prune_augmented = false;  // keep only the latest episode's augmentation
  LTVFitConfig ltv;
  PerturbationConfig perturbation;
  TrainConfig train;  // epochs is overridden from baseline_epochs
  // Hook for the outer controller-optimization step; a no-op by default.
  std::function<void(int episode, const Ensemble&)> optimize_controller;

  int effective_epochs() const {
    return tangent_regularization ? baseline_epochs / 2 : baseline_epochs;
  }
};

struct EpisodeMetrics {
  int episode = 0;
  bool aborted = false;
  std::string note;
  Eigen::Index dataset_size = 0;   // samples trained on this episode
  Eigen::Index augmented_size = 0; // of which augmented
  double mean_final_loss = 0.0;    // over ensemble members
};

struct EpisodeResult {
  Ensemble ensemble;
  std::vector<EpisodeMetrics> metrics;
  std::vector<Trajectory> trajectories;
  Dataset training_set;
};

/// Runs `episodes` iterations of: rollout with a fresh low-pass input, LTV
/// fit, perturbation, and training of every ensemble member on all data
/// gathered so far. A diverged rollout skips its episode and is reported in
/// the metrics.
EpisodeResult episode_loop(const System& system, const Ensemble& model,
                           int episodes, const EpisodeConfig& cfg, Seed seed);

}  // namespace jacprop

#endif  // JACPROP_TANGENT_H_
