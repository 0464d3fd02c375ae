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

#include "jacprop/tangent.h"

#include <string>
#include <utility>

namespace jacprop {
namespace {

Vector sample_std(const Matrix& rows) {
  const Eigen::Index count = rows.cols();
  const Vector mean = rows.rowwise().mean();
  const double denom = static_cast<double>(std::max<Eigen::Index>(count - 1, 1));
  return ((rows.colwise() - mean).rowwise().squaredNorm() / denom).cwiseSqrt();
}

// Stream ids for derive_seed, per episode.
enum Stream : std::uint64_t {
  kInputStream = 0,
  kNoiseStream,
  kInitialStateStream,
  kPerturbStream,
  kTrainStream,
  kResampleStream,
  kStreamsPerEpisode,
};

Seed episode_seed(Seed seed, int episode, Stream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(episode) * kStreamsPerEpisode +
                               stream);
}

struct AugmentedSource {
  Trajectory traj;
  LTVModel teacher;
  Eigen::Index offset = 0;  // first column in the training set
  Seed seed = 0;
};

}  // namespace

void PerturbationConfig::validate() const {
  if (!(scale > 0.0)) throw ParameterError("PerturbationConfig: scale must be > 0");
  if (num_perturbed < 0) {
    throw ParameterError("PerturbationConfig: num_perturbed must be >= 0");
  }
}

std::vector<Perturbation> sample_perturbations(const Trajectory& traj,
                                               const PerturbationConfig& cfg) {
  traj.validate();
  cfg.validate();
  const Eigen::Index steps = traj.transitions();
  const Vector sx = cfg.scale * sample_std(traj.states);
  const Vector su = cfg.scale * sample_std(traj.inputs);
  Rng rng(cfg.seed);
  std::vector<Perturbation> out;
  out.reserve(cfg.num_perturbed);
  for (int c = 0; c < cfg.num_perturbed; ++c) {
    Perturbation p;
    p.dx = sx.asDiagonal() * standard_normal(traj.state_dim(), steps, rng);
    p.du = su.asDiagonal() * standard_normal(traj.input_dim(), steps, rng);
    out.push_back(std::move(p));
  }
  return out;
}

Dataset augment_with(const Trajectory& traj, const LTVModel& teacher,
                     const std::vector<Perturbation>& perturbations) {
  traj.validate();
  const Eigen::Index steps = traj.transitions();
  if (teacher.length() != steps) {
    throw DimensionError("perturb_trajectory: teacher has " +
                         std::to_string(teacher.length()) + " steps, trajectory " +
                         std::to_string(steps));
  }
  const Eigen::Index n = traj.state_dim(), m = traj.input_dim();
  const Eigen::Index total = steps * static_cast<Eigen::Index>(perturbations.size());
  Dataset out{Matrix(n, total), Matrix(m, total), Matrix(n, total)};
  Eigen::Index col = 0;
  for (const Perturbation& p : perturbations) {
    if (p.dx.rows() != n || p.dx.cols() != steps || p.du.rows() != m ||
        p.du.cols() != steps) {
      throw DimensionError("augment_with: perturbation shape mismatch");
    }
    for (Eigen::Index t = 0; t < steps; ++t, ++col) {
      out.x.col(col) = traj.states.col(t) + p.dx.col(t);
      out.u.col(col) = traj.inputs.col(t) + p.du.col(t);
      out.x_next.col(col) = teacher.a[t] * out.x.col(col) + teacher.b[t] * out.u.col(col);
    }
  }
  return out;
}

Dataset perturb_trajectory(const Trajectory& traj, const LTVModel& teacher,
                           const PerturbationConfig& cfg) {
  return augment_with(traj, teacher, sample_perturbations(traj, cfg));
}

EpisodeResult episode_loop(const System& system, const Ensemble& model,
                           int episodes, const EpisodeConfig& cfg, Seed seed) {
  if (episodes < 0) throw ParameterError("episode_loop: episodes must be >= 0");
  EpisodeResult result;
  result.ensemble = model;
  if (episodes == 0) return result;

  const Eigen::Index n = state_dim(system), m = input_dim(system);
  const Vector nominal =
      cfg.nominal_state.size() == 0 ? Vector::Zero(n) : cfg.nominal_state;
  if (nominal.size() != n) {
    throw DimensionError("episode_loop: nominal state does not match system");
  }
  const double sigma =
      cfg.input_sigma > 0.0 ? cfg.input_sigma : unit_variance_sigma(cfg.input_pole);

  Dataset real;
  std::vector<AugmentedSource> sources;
  for (int ep = 0; ep < episodes; ++ep) {
    EpisodeMetrics metrics;
    metrics.episode = ep;

    Rng init_rng(episode_seed(seed, ep, kInitialStateStream));
    const Vector x0 = nominal + cfg.initial_state_std * standard_normal(n, 1, init_rng);
    const Matrix inputs = lowpass_random_input(
        cfg.length, m, cfg.input_pole, sigma, episode_seed(seed, ep, kInputStream));
    Trajectory traj;
    try {
      traj = rollout(system, x0, inputs, cfg.noise_std,
                     episode_seed(seed, ep, kNoiseStream));
    } catch (const DivergenceError& e) {
      metrics.aborted = true;
      metrics.note = e.what();
      result.metrics.push_back(std::move(metrics));
      continue;
    }
    real.append(transitions(traj));

    if (cfg.tangent_regularization) {
      AugmentedSource src;
      src.teacher = fit_ltv(traj, cfg.ltv);
      src.traj = traj;
      src.seed = episode_seed(seed, ep, kPerturbStream);
      if (cfg.prune_augmented) sources.clear();
      sources.push_back(std::move(src));
    }

    // Training set: all real transitions followed by each augmentation.
    Dataset data = real;
    std::vector<PerturbationConfig> pcfgs;
    for (AugmentedSource& src : sources) {
      PerturbationConfig pc = cfg.perturbation;
      pc.seed = src.seed;
      src.offset = data.size();
      data.append(perturb_trajectory(src.traj, src.teacher, pc));
      pcfgs.push_back(pc);
    }
    metrics.dataset_size = data.size();
    metrics.augmented_size = data.size() - real.size();

    TrainConfig tc = cfg.train;
    tc.epochs = cfg.effective_epochs();
    tc.seed = episode_seed(seed, ep, kTrainStream);
    TrainHooks hooks;
    if (cfg.perturbation.resample_each_epoch && !sources.empty()) {
      const Seed resample = episode_seed(seed, ep, kResampleStream);
      hooks.before_epoch = [&sources, &pcfgs, resample](int epoch, Dataset& d) {
        if (epoch == 0) return;  // epoch 0 trains on the recorded draw
        for (std::size_t s = 0; s < sources.size(); ++s) {
          PerturbationConfig pc = pcfgs[s];
          pc.seed = derive_seed(resample, static_cast<std::uint64_t>(epoch) *
                                              sources.size() + s);
          const Dataset fresh =
              perturb_trajectory(sources[s].traj, sources[s].teacher, pc);
          const Eigen::Index off = sources[s].offset;
          d.x.middleCols(off, fresh.size()) = fresh.x;
          d.u.middleCols(off, fresh.size()) = fresh.u;
          d.x_next.middleCols(off, fresh.size()) = fresh.x_next;
        }
      };
    }

    Ensemble trained;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < result.ensemble.members.size(); ++i) {
      TrainConfig member = tc;
      member.seed = derive_seed(tc.seed, i);
      TrainResult r = train(result.ensemble.members[i], data, member, hooks);
      if (!r.loss_curve.empty()) loss_sum += r.loss_curve.back();
      trained.members.push_back(std::move(r.model));
    }
    result.ensemble = std::move(trained);
    metrics.mean_final_loss =
        loss_sum / static_cast<double>(result.ensemble.members.size());
    if (cfg.optimize_controller) cfg.optimize_controller(ep, result.ensemble);

    result.trajectories.push_back(std::move(traj));
    result.training_set = std::move(data);
    result.metrics.push_back(std::move(metrics));
  }
  return result;
}

}  // namespace jacprop
