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

#include "jacprop/ltv.h"

#include <string>

namespace jacprop {

void LTVFitConfig::validate() const {
  if (!(lambda >= 0.0)) throw ParameterError("LTVFitConfig: lambda must be >= 0");
  if (!(prior_scale >= 0.0)) {
    throw ParameterError("LTVFitConfig: prior_scale must be >= 0");
  }
}

Vector LTVModel::k(Eigen::Index t) const {
  const Eigen::Index n = state_dim(), m = input_dim();
  Vector out(n * (n + m));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.segment(i * (n + m), n) = a.at(t).row(i).transpose();
    out.segment(i * (n + m) + n, m) = b.at(t).row(i).transpose();
  }
  return out;
}

JacobianMatrix LTVModel::jacobian(Eigen::Index t) const {
  return JacobianMatrix(a.at(t), b.at(t));
}

LTVNormalEquations ltv_normal_equations(const Trajectory& traj,
                                        const LTVFitConfig& cfg) {
  traj.validate();
  cfg.validate();
  const Eigen::Index n = traj.state_dim(), m = traj.input_dim();
  const Eigen::Index d = n + m;
  const Eigen::Index steps = traj.transitions();
  if (steps < 2) throw DimensionError("fit_ltv: needs T >= 3");
  const double smooth = cfg.lambda * cfg.lambda;
  const double ridge = cfg.prior_scale * cfg.prior_scale;

  LTVNormalEquations eq;
  eq.lhs.diagonal.reserve(steps);
  eq.lhs.lower.assign(steps - 1, -smooth * Matrix::Identity(d, d));
  eq.rhs.resize(steps * d, n);
  Vector phi(d);
  for (Eigen::Index t = 0; t < steps; ++t) {
    phi << traj.states.col(t), traj.inputs.col(t);
    const double neighbours = (t == 0 || t == steps - 1) ? 1.0 : 2.0;
    Matrix block = phi * phi.transpose();
    block.diagonal().array() += ridge + neighbours * smooth;
    eq.lhs.diagonal.push_back(std::move(block));
    eq.rhs.middleRows(t * d, d) = phi * traj.states.col(t + 1).transpose();
  }
  return eq;
}

LTVModel fit_ltv(const Trajectory& traj, const LTVFitConfig& cfg) {
  const LTVNormalEquations eq = ltv_normal_equations(traj, cfg);
  const Eigen::Index n = traj.state_dim();
  const Eigen::Index d = eq.lhs.block_size();
  Matrix solution;
  try {
    solution = solve_banded_spd(eq.lhs, eq.rhs);
  } catch (const NotSpdError& e) {
    throw RankDeficiencyError(
        std::string("fit_ltv: normal equations are singular (") + e.what() +
        "); the input is not exciting enough, use lambda > 0 or a ridge term");
  }
  LTVModel model;
  model.dt = traj.dt;
  const Eigen::Index steps = eq.lhs.num_blocks();
  model.a.reserve(steps);
  model.b.reserve(steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    // Column i of the block holds row i of [A_t B_t].
    const Matrix rows = solution.middleRows(t * d, d).transpose();
    model.a.push_back(rows.leftCols(n));
    model.b.push_back(rows.rightCols(d - n));
  }
  return model;
}

Vector ltv_predict(const LTVModel& model, const Vector& x, const Vector& u,
                   Eigen::Index t) {
  if (t < 0 || t >= model.length()) {
    throw IndexError("ltv_predict: index " + std::to_string(t) +
                     " outside [0, " + std::to_string(model.length()) + ")");
  }
  if (x.size() != model.state_dim() || u.size() != model.input_dim()) {
    throw DimensionError("ltv_predict: dimension mismatch");
  }
  return model.a[t] * x + model.b[t] * u;
}

JacobianMatrix fit_lti(const Trajectory& traj, double ridge) {
  traj.validate();
  const Eigen::Index n = traj.state_dim(), m = traj.input_dim();
  const Eigen::Index steps = traj.transitions();
  Matrix phi(n + m, steps);
  phi << traj.states.leftCols(steps), traj.inputs.leftCols(steps);
  Matrix gram = phi * phi.transpose();
  gram.diagonal().array() += ridge * ridge;
  const Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw RankDeficiencyError("fit_lti: regressors are rank deficient");
  }
  const Matrix coeffs = ldlt.solve(phi * traj.states.rightCols(steps).transpose());
  return JacobianMatrix(Matrix(coeffs.transpose()));
}

double ltv_objective(const Trajectory& traj, const LTVModel& model,
                     const LTVFitConfig& cfg) {
  if (model.length() != traj.transitions()) {
    throw DimensionError("ltv_objective: model and trajectory lengths differ");
  }
  double fit = 0.0, smooth = 0.0, ridge = 0.0;
  for (Eigen::Index t = 0; t < model.length(); ++t) {
    fit += (traj.states.col(t + 1) -
            ltv_predict(model, traj.states.col(t), traj.inputs.col(t), t))
               .squaredNorm();
    const Vector kt = model.k(t);
    ridge += kt.squaredNorm();
    if (t + 1 < model.length()) smooth += (model.k(t + 1) - kt).squaredNorm();
  }
  return fit + cfg.lambda * cfg.lambda * smooth +
         cfg.prior_scale * cfg.prior_scale * ridge;
}

}  // namespace jacprop
