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

#include "jacprop/neural.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace jacprop {
namespace {

constexpr double kLeakySlope = 0.01;

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

Matrix stack_inputs(const Matrix& x, const Matrix& u) {
  Matrix phi(x.rows() + u.rows(), x.cols());
  phi << x, u;
  return phi;
}

Matrix standardize(const Standardization& s, const Matrix& phi) {
  if (s.empty()) return phi;
  return ((phi.colwise() - s.mean).array().colwise() / s.scale.array())
      .matrix();
}

// Activations of one forward pass. pre[l] and post[l] are the hidden layer
// values before and after the nonlinearity (and dropout).
struct Forward {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
  Matrix output;
};

Forward forward(const MLPModel& model, const Matrix& x, const Matrix& u,
                const DropoutMasks* masks) {
  Forward fw;
  fw.input = standardize(model.standardization, stack_inputs(x, u));
  const std::size_t hidden = model.layers.size() - 1;
  const double keep = 1.0 - model.dropout_rate;
  const Matrix* h = &fw.input;
  for (std::size_t l = 0; l < hidden; ++l) {
    const Layer& layer = model.layers[l];
    Matrix a = layer.weight * *h;
    a.colwise() += layer.bias;
    Matrix z = activate(model.activation, a.array()).matrix();
    if (masks != nullptr) z.array() *= (*masks)[l].array() / keep;
    fw.pre.push_back(std::move(a));
    fw.post.push_back(std::move(z));
    h = &fw.post.back();
  }
  const Layer& out = model.layers.back();
  fw.output = out.weight * *h;
  fw.output.colwise() += out.bias;
  return fw;
}

void check_batch_dims(const MLPModel& model, const Matrix& x, const Matrix& u) {
  if (x.rows() != model.state_dim || u.rows() != model.input_dim ||
      x.cols() != u.cols()) {
    throw DimensionError("model expects x of size " +
                         std::to_string(model.state_dim) + " and u of size " +
                         std::to_string(model.input_dim) + ", got " +
                         std::to_string(x.rows()) + " and " +
                         std::to_string(u.rows()));
  }
}

Parameters zeros_like(const Parameters& params) {
  Parameters out;
  out.reserve(params.size());
  for (const Layer& l : params) {
    out.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                   Vector::Zero(l.bias.size())});
  }
  return out;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::elu: return "elu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::swish: return "swish";
    case Activation::identity: return "identity";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  for (Activation a : {Activation::relu, Activation::leaky_relu,
                       Activation::elu, Activation::sigmoid, Activation::tanh,
                       Activation::swish, Activation::identity}) {
    if (to_string(a) == name) return a;
  }
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

Eigen::ArrayXXd activate(Activation a, const Eigen::ArrayXXd& x) {
  switch (a) {
    case Activation::relu: return x.max(0.0);
    case Activation::leaky_relu: return (x > 0.0).select(x, kLeakySlope * x);
    case Activation::elu: return (x > 0.0).select(x, x.exp() - 1.0);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return x.tanh();
    case Activation::swish: return x * sigmoid(x);
    case Activation::identity: return x;
  }
  return x;
}

Eigen::ArrayXXd activation_derivative(Activation a, const Eigen::ArrayXXd& x) {
  using Array = Eigen::ArrayXXd;
  const Array ones = Array::Ones(x.rows(), x.cols());
  switch (a) {
    case Activation::relu:
      return (x > 0.0).select(ones, Array::Zero(x.rows(), x.cols()));
    case Activation::leaky_relu:
      return (x > 0.0).select(ones, Array::Constant(x.rows(), x.cols(),
                                                    kLeakySlope));
    case Activation::elu: return (x > 0.0).select(ones, x.exp());
    case Activation::sigmoid: {
      const Array s = sigmoid(x);
      return s * (1.0 - s);
    }
    case Activation::tanh: return 1.0 - x.tanh().square();
    case Activation::swish: {
      const Array s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case Activation::identity: return ones;
  }
  return ones;
}

std::string_view to_string(ObjectiveForm::Kind k) {
  switch (k) {
    case ObjectiveForm::Kind::f: return "f";
    case ObjectiveForm::Kind::g: return "g";
    case ObjectiveForm::Kind::generalized: return "generalized";
    case ObjectiveForm::Kind::tau_shift: return "tau";
  }
  return "?";
}

ObjectiveForm::Kind parse_objective_kind(std::string_view name) {
  for (auto k : {ObjectiveForm::Kind::f, ObjectiveForm::Kind::g,
                 ObjectiveForm::Kind::generalized,
                 ObjectiveForm::Kind::tau_shift}) {
    if (to_string(k) == name) return k;
  }
  throw ParameterError("unknown objective form '" + std::string(name) + "'");
}

void ObjectiveForm::validate(Eigen::Index n, Eigen::Index m) const {
  if (kind == Kind::generalized &&
      (a0.rows() != n || a0.cols() != n || b0.rows() != n || b0.cols() != m)) {
    throw DimensionError("ObjectiveForm: nominal A0/B0 do not match (n, m)");
  }
  if (kind == Kind::tau_shift && tau.size() != n) {
    throw DimensionError("ObjectiveForm: tau must have n entries");
  }
}

Matrix ObjectiveForm::skip(const Matrix& x, const Matrix& u) const {
  switch (kind) {
    case Kind::f: return Matrix::Zero(x.rows(), x.cols());
    case Kind::g: return x;
    case Kind::generalized: return a0 * x + b0 * u;
    case Kind::tau_shift: return (x.array().colwise() * tau.array()).matrix();
  }
  return x;
}

Matrix ObjectiveForm::skip_jacobian(Eigen::Index n, Eigen::Index m) const {
  Matrix j = Matrix::Zero(n, n + m);
  switch (kind) {
    case Kind::f: break;
    case Kind::g: j.leftCols(n).setIdentity(); break;
    case Kind::generalized: j << a0, b0; break;
    case Kind::tau_shift: j.leftCols(n).diagonal() = tau; break;
  }
  return j;
}

Eigen::Index MLPModel::num_parameters() const {
  Eigen::Index count = 0;
  for (const Layer& l : layers) count += l.weight.size() + l.bias.size();
  return count;
}

void MLPModel::validate() const {
  if (layers.empty()) throw DimensionError("MLPModel: no layers");
  Eigen::Index in = state_dim + input_dim;
  for (const Layer& l : layers) {
    if (l.weight.cols() != in || l.bias.size() != l.weight.rows()) {
      throw DimensionError("MLPModel: layer dimensions do not chain");
    }
    in = l.weight.rows();
  }
  if (in != state_dim) throw DimensionError("MLPModel: output dim != n");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ParameterError("MLPModel: dropout rate must lie in [0, 1)");
  }
  if (!standardization.empty() &&
      (standardization.mean.size() != state_dim + input_dim ||
       standardization.scale.size() != state_dim + input_dim)) {
    throw DimensionError("MLPModel: standardization size != n + m");
  }
  objective.validate(state_dim, input_dim);
}

MLPModel make_mlp(Eigen::Index n, Eigen::Index m,
                  const std::vector<Eigen::Index>& hidden,
                  Activation activation, ObjectiveForm objective, Seed seed,
                  double dropout_rate) {
  if (n < 1 || m < 0) throw DimensionError("make_mlp: need n >= 1, m >= 0");
  MLPModel model;
  model.state_dim = n;
  model.input_dim = m;
  model.activation = activation;
  model.objective = std::move(objective);
  model.dropout_rate = dropout_rate;
  Rng rng(seed);
  Eigen::Index in = n + m;
  std::vector<Eigen::Index> widths = hidden;
  widths.push_back(n);
  for (Eigen::Index out : widths) {
    if (out < 1) throw DimensionError("make_mlp: layer width must be >= 1");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    Layer layer{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index j = 0; j < in; ++j) {
      for (Eigen::Index i = 0; i < out; ++i) layer.weight(i, j) = uniform(rng);
    }
    model.layers.push_back(std::move(layer));
    in = out;
  }
  model.validate();
  return model;
}

void Dataset::append(const Dataset& other) {
  if (other.size() == 0) return;
  if (size() == 0) {
    *this = other;
    return;
  }
  if (other.x.rows() != x.rows() || other.u.rows() != u.rows()) {
    throw DimensionError("Dataset::append: dimension mismatch");
  }
  auto grow = [](Matrix& dst, const Matrix& src) {
    Matrix merged(dst.rows(), dst.cols() + src.cols());
    merged << dst, src;
    dst = std::move(merged);
  };
  grow(x, other.x);
  grow(u, other.u);
  grow(x_next, other.x_next);
}

Dataset Dataset::select(const std::vector<Eigen::Index>& columns) const {
  return {x(Eigen::all, columns), u(Eigen::all, columns),
          x_next(Eigen::all, columns)};
}

Dataset transitions(const Trajectory& traj) {
  traj.validate();
  const Eigen::Index steps = traj.transitions();
  return {traj.states.leftCols(steps), traj.inputs.leftCols(steps),
          traj.states.rightCols(steps)};
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ParameterError("TrainConfig: epochs must be >= 0");
  if (!(step_size > 0.0)) throw ParameterError("TrainConfig: step size must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ParameterError("TrainConfig: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ParameterError("TrainConfig: epsilon must be > 0");
  if (!(weight_decay >= 0.0)) {
    throw ParameterError("TrainConfig: weight decay must be >= 0");
  }
  if (minibatch < 1) throw ParameterError("TrainConfig: minibatch must be >= 1");
}

Matrix net_output(const MLPModel& model, const Matrix& x, const Matrix& u) {
  check_batch_dims(model, x, u);
  return forward(model, x, u, nullptr).output;
}

Matrix predict_batch(const MLPModel& model, const Matrix& x, const Matrix& u) {
  check_batch_dims(model, x, u);
  return model.objective.skip(x, u) + forward(model, x, u, nullptr).output;
}

Vector predict(const MLPModel& model, const Vector& x, const Vector& u) {
  return predict_batch(model, x, u);
}

DropoutMasks sample_dropout_masks(const MLPModel& model, Eigen::Index batch,
                                  Rng& rng) {
  DropoutMasks masks;
  std::bernoulli_distribution keep(1.0 - model.dropout_rate);
  for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
    Matrix mask(model.layers[l].weight.rows(), batch);
    for (Eigen::Index j = 0; j < batch; ++j) {
      for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        mask(i, j) = keep(rng) ? 1.0 : 0.0;
      }
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

LossAndGrad loss_and_grad(const MLPModel& model, const Dataset& batch,
                          const TrainConfig& cfg, const DropoutMasks* masks) {
  check_batch_dims(model, batch.x, batch.u);
  if (batch.size() == 0) throw DimensionError("loss_and_grad: empty batch");
  const Forward fw = forward(model, batch.x, batch.u, masks);
  const Matrix residual =
      model.objective.skip(batch.x, batch.u) + fw.output - batch.x_next;

  LossAndGrad out;
  out.data_loss = 0.5 * residual.squaredNorm();
  out.value = out.data_loss;
  out.grad.resize(model.layers.size());

  const double keep = 1.0 - model.dropout_rate;
  Matrix delta = residual;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const Matrix& below = l == 0 ? fw.input : fw.post[l - 1];
    Layer& g = out.grad[l];
    g.weight.noalias() = delta * below.transpose();
    g.bias = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = model.layers[l].weight.transpose() * delta;
    if (masks != nullptr) back.array() *= (*masks)[l - 1].array() / keep;
    delta = (back.array() *
             activation_derivative(model.activation, fw.pre[l - 1].array()))
                .matrix();
  }
  if (cfg.weight_decay > 0.0) {
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const Matrix& w = model.layers[l].weight;
      out.value += 0.5 * cfg.weight_decay * w.squaredNorm();
      out.grad[l].weight += cfg.weight_decay * w;
    }
  }
  return out;
}

AdamState AdamState::zeros_like(const Parameters& params) {
  return {jacprop::zeros_like(params), jacprop::zeros_like(params), 0};
}

void adam_step(Parameters& params, AdamState& state, const Parameters& grad,
               const TrainConfig& cfg) {
  if (state.first.size() != params.size()) state = AdamState::zeros_like(params);
  if (grad.size() != params.size()) {
    throw DimensionError("adam_step: gradient does not match parameters");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    p.array() -= cfg.step_size * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + cfg.epsilon);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].weight, state.first[l].weight, state.second[l].weight,
           grad[l].weight);
    update(params[l].bias, state.first[l].bias, state.second[l].bias,
           grad[l].bias);
  }
}

Standardization compute_standardization(const Dataset& data) {
  const Matrix phi = stack_inputs(data.x, data.u);
  Standardization s;
  s.mean = phi.rowwise().mean();
  s.scale =
      ((phi.colwise() - s.mean).rowwise().squaredNorm() /
       static_cast<double>(std::max<Eigen::Index>(phi.cols(), 1)))
          .cwiseSqrt();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
    if (!(s.scale(i) > 1e-12)) s.scale(i) = 1.0;
  }
  return s;
}

MLPModel restandardize(MLPModel model, const Standardization& stats) {
  const Eigen::Index d = model.state_dim + model.input_dim;
  const Vector old_mean =
      model.standardization.empty() ? Vector::Zero(d) : model.standardization.mean;
  const Vector old_scale =
      model.standardization.empty() ? Vector::Ones(d) : model.standardization.scale;
  const Vector new_mean = stats.empty() ? Vector::Zero(d) : stats.mean;
  const Vector new_scale = stats.empty() ? Vector::Ones(d) : stats.scale;
  Layer& first = model.layers.front();
  first.bias += first.weight * ((new_mean - old_mean).array() / old_scale.array())
                                   .matrix();
  first.weight = first.weight *
                 (new_scale.array() / old_scale.array()).matrix().asDiagonal();
  model.standardization = stats;
  return model;
}

TrainResult train(MLPModel model, const Dataset& data, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  model.validate();
  TrainResult result;
  if (cfg.epochs == 0) {
    result.model = std::move(model);
    return result;
  }
  if (data.size() == 0) throw DimensionError("train: empty dataset");
  if (cfg.standardize) model = restandardize(std::move(model), compute_standardization(data));

  Rng rng(cfg.seed);
  AdamState adam = AdamState::zeros_like(model.layers);
  Dataset working = data;
  std::vector<Eigen::Index> order(data.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  result.loss_curve.reserve(cfg.epochs);
  const bool dropout = model.dropout_rate > 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (hooks.before_epoch) hooks.before_epoch(epoch, working);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.minibatch)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch));
      const std::vector<Eigen::Index> idx(order.begin() + start,
                                          order.begin() + stop);
      const Dataset batch = working.select(idx);
      LossAndGrad lg;
      if (dropout) {
        const DropoutMasks masks = sample_dropout_masks(model, batch.size(), rng);
        lg = loss_and_grad(model, batch, cfg, &masks);
      } else {
        lg = loss_and_grad(model, batch, cfg);
      }
      total += lg.data_loss;
      adam_step(model.layers, adam, lg.grad, cfg);
    }
    const double mean = total / static_cast<double>(working.size());
    if (!std::isfinite(mean)) {
      throw DivergenceError(
          "train: non-finite loss at epoch " + std::to_string(epoch), epoch);
    }
    result.loss_curve.push_back(mean);
    if (hooks.after_epoch) hooks.after_epoch(epoch, model);
  }
  result.model = std::move(model);
  return result;
}

JacobianMatrix net_jacobian(const MLPModel& model, const Vector& x,
                            const Vector& u) {
  check_batch_dims(model, x, u);
  const Eigen::Index d = model.state_dim + model.input_dim;
  Matrix chain = Matrix::Identity(d, d);
  if (!model.standardization.empty()) {
    chain = model.standardization.scale.cwiseInverse().asDiagonal();
  }
  const Forward fw = forward(model, x, u, nullptr);
  for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
    chain = model.layers[l].weight * chain;
    chain = activation_derivative(model.activation, fw.pre[l].array())
                .matrix()
                .col(0)
                .asDiagonal() *
            chain;
  }
  return JacobianMatrix(Matrix(model.layers.back().weight * chain));
}

JacobianMatrix model_jacobian(const MLPModel& model, const Vector& x,
                              const Vector& u) {
  JacobianMatrix j = net_jacobian(model, x, u);
  j.entries += model.objective.skip_jacobian(model.state_dim, model.input_dim);
  return j;
}

Eigen::Index Ensemble::state_dim() const {
  if (members.empty()) throw DimensionError("Ensemble: no members");
  return members.front().state_dim;
}

Eigen::Index Ensemble::input_dim() const {
  if (members.empty()) throw DimensionError("Ensemble: no members");
  return members.front().input_dim;
}

Ensemble make_ensemble(Eigen::Index n, Eigen::Index m, int size,
                       const std::vector<Eigen::Index>& hidden,
                       const ObjectiveForm& objective, Seed seed,
                       double dropout_rate) {
  if (size < 1) throw ParameterError("make_ensemble: size must be >= 1");
  Ensemble ens;
  for (int i = 0; i < size; ++i) {
    const Activation act =
        kEnsembleActivations[static_cast<std::size_t>(i) % kEnsembleActivations.size()];
    ens.members.push_back(make_mlp(n, m, hidden, act, objective,
                                   derive_seed(seed, static_cast<std::uint64_t>(i)),
                                   dropout_rate));
  }
  return ens;
}

Ensemble train_ensemble(const Ensemble& ensemble, const Dataset& data,
                        const TrainConfig& cfg, const TrainHooks& hooks) {
  Ensemble out;
  out.members.reserve(ensemble.members.size());
  for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
    TrainConfig member_cfg = cfg;
    member_cfg.seed = cfg.seed + i;
    out.members.push_back(
        train(ensemble.members[i], data, member_cfg, hooks).model);
  }
  return out;
}

Vector ensemble_predict(const Ensemble& ens, const Vector& x, const Vector& u) {
  if (ens.members.empty()) throw DimensionError("ensemble_predict: empty ensemble");
  Vector sum = predict(ens.members.front(), x, u);
  for (std::size_t i = 1; i < ens.members.size(); ++i) {
    sum += predict(ens.members[i], x, u);
  }
  return sum / static_cast<double>(ens.members.size());
}

JacobianMatrix ensemble_jacobian(const Ensemble& ens, const Vector& x,
                                 const Vector& u) {
  if (ens.members.empty()) {
    throw DimensionError("ensemble_jacobian: empty ensemble");
  }
  Matrix sum = model_jacobian(ens.members.front(), x, u).entries;
  for (std::size_t i = 1; i < ens.members.size(); ++i) {
    sum += model_jacobian(ens.members[i], x, u).entries;
  }
  return JacobianMatrix(Matrix(sum / static_cast<double>(ens.members.size())));
}

}  // namespace jacprop
