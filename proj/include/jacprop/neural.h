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

// Feed-forward dynamics approximators. A model maps (x, u) to x+ as
//
//   x+ = skip(x, u) + net((phi - mean) / scale),   phi = [x; u]
//
// where the skip term is fixed by the objective form: zero (learn f
// directly), x (learn the increment g), A0 x + B0 u (nominal linear model)
// or tau .* x (diagonal eigenvalue shift). Hidden layers share one
// activation; the output layer is linear.

#ifndef JACPROP_NEURAL_H_
#define JACPROP_NEURAL_H_

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "jacprop/linalg.h"
#include "jacprop/types.h"

namespace jacprop {

enum class Activation { relu, leaky_relu, elu, sigmoid, tanh, swish, identity };

/// The six activations compared in the activation study.
inline constexpr std::array<Activation, 6> kStudiedActivations = {
    Activation::relu,    Activation::leaky_relu, Activation::elu,
    Activation::sigmoid, Activation::tanh,       Activation::swish};

/// Default ensemble composition, cycled for larger ensembles.
inline constexpr std::array<Activation, 4> kEnsembleActivations = {
    Activation::elu, Activation::sigmoid, Activation::tanh, Activation::swish};

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

Eigen::ArrayXXd activate(Activation a, const Eigen::ArrayXXd& x);
Eigen::ArrayXXd activation_derivative(Activation a, const Eigen::ArrayXXd& x);

struct ObjectiveForm {
  enum class Kind { f, g, generalized, tau_shift };

  Kind kind = Kind::g;
  Matrix a0;   // generalized only
  Matrix b0;   // generalized only
  Vector tau;  // tau_shift only

  static ObjectiveForm f() { return {Kind::f, {}, {}, {}}; }
  static ObjectiveForm g() { return {Kind::g, {}, {}, {}}; }
  static ObjectiveForm generalized(Matrix a0, Matrix b0) {
    return {Kind::generalized, std::move(a0), std::move(b0), {}};
  }
  static ObjectiveForm tau_shift(Vector tau) {
    return {Kind::tau_shift, {}, {}, std::move(tau)};
  }

  void validate(Eigen::Index n, Eigen::Index m) const;
  /// Fixed part of the prediction, one column per sample.
  Matrix skip(const Matrix& x, const Matrix& u) const;
  /// Jacobian of skip() with respect to [x; u].
  Matrix skip_jacobian(Eigen::Index n, Eigen::Index m) const;
};

std::string_view to_string(ObjectiveForm::Kind k);
ObjectiveForm::Kind parse_objective_kind(std::string_view name);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};
using Parameters = std::vector<Layer>;

/// Input standardization. Empty vectors mean identity.
struct Standardization {
  Vector mean;
  Vector scale;

  bool empty() const { return mean.size() == 0; }
};

struct MLPModel {
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  Parameters layers;
  Activation activation = Activation::tanh;
  ObjectiveForm objective;
  double dropout_rate = 0.0;
  Standardization standardization;

  Eigen::Index num_parameters() const;
  void validate() const;
};

/// Glorot-uniform weights, zero biases.
MLPModel make_mlp(Eigen::Index n, Eigen::Index m,
                  const std::vector<Eigen::Index>& hidden,
                  Activation activation, ObjectiveForm objective, Seed seed,
                  double dropout_rate = 0.0);

/// Column-per-sample transitions (x, u, x+).
struct Dataset {
  Matrix x;
  Matrix u;
  Matrix x_next;

  Eigen::Index size() const { return x.cols(); }
  void append(const Dataset& other);
  Dataset select(const std::vector<Eigen::Index>& columns) const;
};

/// All T - 1 transitions of a trajectory.
Dataset transitions(const Trajectory& traj);

struct TrainConfig {
  int epochs = 1000;
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  Eigen::Index minibatch = 64;
  Seed seed = 0;
  bool standardize = true;

  void validate() const;
};

Vector predict(const MLPModel& model, const Vector& x, const Vector& u);
Matrix predict_batch(const MLPModel& model, const Matrix& x, const Matrix& u);
/// The network term alone, without the objective's skip contribution.
Matrix net_output(const MLPModel& model, const Matrix& x, const Matrix& u);

/// One 0/1 mask per hidden layer, hidden x batch.
using DropoutMasks = std::vector<Matrix>;
DropoutMasks sample_dropout_masks(const MLPModel& model, Eigen::Index batch,
                                  Rng& rng);

struct LossAndGrad {
  double value = 0.0;      // data term plus weight decay
  double data_loss = 0.0;  // 1/2 sum of squared residuals
  Parameters grad;
};

/// V = 1/2 sum ||x+ - f(x, u)||^2 + eta/2 sum ||W||^2 (biases excluded).
/// With masks, hidden activations are multiplied by mask / (1 - rate).
LossAndGrad loss_and_grad(const MLPModel& model, const Dataset& batch,
                          const TrainConfig& cfg,
                          const DropoutMasks* masks = nullptr);

struct AdamState {
  Parameters first;
  Parameters second;
  long step = 0;

  static AdamState zeros_like(const Parameters& params);
};

void adam_step(Parameters& params, AdamState& state, const Parameters& grad,
               const TrainConfig& cfg);

struct TrainHooks {
  // May rewrite the training set before each epoch (target resampling).
  std::function<void(int epoch, Dataset& data)> before_epoch;
  std::function<void(int epoch, const MLPModel& model)> after_epoch;
};

struct TrainResult {
  MLPModel model;
  std::vector<double> loss_curve;  // mean data loss per sample, per epoch
};

/// Epochs of shuffled minibatch ADAM. When cfg.standardize is set the model
/// is first re-expressed in the statistics of `data` without changing the
/// function it computes.
TrainResult train(MLPModel model, const Dataset& data, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

Standardization compute_standardization(const Dataset& data);
MLPModel restandardize(MLPModel model, const Standardization& stats);

/// Jacobian of predict() with respect to (x, u), skip term included.
JacobianMatrix model_jacobian(const MLPModel& model, const Vector& x,
                              const Vector& u);
/// Jacobian of net_output() alone.
JacobianMatrix net_jacobian(const MLPModel& model, const Vector& x,
                            const Vector& u);

struct Ensemble {
  std::vector<MLPModel> members;

  Eigen::Index state_dim() const;
  Eigen::Index input_dim() const;
};

/// `size` members with activations cycled from kEnsembleActivations and
/// seeds derived from `seed`.
Ensemble make_ensemble(Eigen::Index n, Eigen::Index m, int size,
                       const std::vector<Eigen::Index>& hidden,
                       const ObjectiveForm& objective, Seed seed,
                       double dropout_rate = 0.0);

/// Trains every member on the same data; member i uses seed cfg.seed + i.
Ensemble train_ensemble(const Ensemble& ensemble, const Dataset& data,
                        const TrainConfig& cfg, const TrainHooks& hooks = {});

Vector ensemble_predict(const Ensemble& ens, const Vector& x, const Vector& u);
JacobianMatrix ensemble_jacobian(const Ensemble& ens, const Vector& x,
                                 const Vector& u);

// Uniform access for the evaluation code.
inline Vector predict(const Ensemble& ens, const Vector& x, const Vector& u) {
  return ensemble_predict(ens, x, u);
}
inline JacobianMatrix model_jacobian(const Ensemble& ens, const Vector& x,
                                     const Vector& u) {
  return ensemble_jacobian(ens, x, u);
}

}  // namespace jacprop

#endif  // JACPROP_NEURAL_H_
