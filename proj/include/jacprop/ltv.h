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

// Linear time-varying models x_{t+1} = A_t x_t + B_t u_t fit along a single
// trajectory with a random-walk smoothness penalty on the coefficients.

#ifndef JACPROP_LTV_H_
#define JACPROP_LTV_H_

#include <vector>

#include "jacprop/linalg.h"
#include "jacprop/types.h"

namespace jacprop {

struct LTVFitConfig {
  double lambda = 10.0;       // weight on ||k_{t+1} - k_t||
  double prior_scale = 1e-3;  // ridge weight on ||k_t||

  void validate() const;
};

struct LTVModel {
  std::vector<Matrix> a;  // A_t, n x n
  std::vector<Matrix> b;  // B_t, n x m
  double dt = 0.0;

  Eigen::Index length() const { return static_cast<Eigen::Index>(a.size()); }
  Eigen::Index state_dim() const { return a.empty() ? 0 : a.front().rows(); }
  Eigen::Index input_dim() const { return b.empty() ? 0 : b.front().cols(); }

  /// vec([A_t^T; B_t^T]): the rows of [A_t B_t] laid end to end.
  Vector k(Eigen::Index t) const;
  JacobianMatrix jacobian(Eigen::Index t) const;
};

/// Minimizes
///   sum_t ||x_{t+1} - A_t x_t - B_t u_t||^2
///     + lambda^2 sum_t ||k_{t+1} - k_t||^2 + eps^2 sum_t ||k_t||^2
/// exactly. Every row of [A_t B_t] shares the same block-tridiagonal normal
/// matrix, so it is factored once and solved for all n rows together.
LTVModel fit_ltv(const Trajectory& traj, const LTVFitConfig& cfg);

/// A_t x + B_t u.
Vector ltv_predict(const LTVModel& model, const Vector& x, const Vector& u,
                   Eigen::Index t);

/// Time-invariant ridge least-squares fit of [A B] over all transitions.
JacobianMatrix fit_lti(const Trajectory& traj, double ridge = 0.0);

/// Value of the fit_ltv objective for an arbitrary model.
double ltv_objective(const Trajectory& traj, const LTVModel& model,
                     const LTVFitConfig& cfg);

/// The normal equations solved by fit_ltv. Returned for diagnostics: the
/// block size is n + m and the right-hand side has one column per state.
struct LTVNormalEquations {
  BlockTridiagonal<double> lhs;
  Matrix rhs;
};
LTVNormalEquations ltv_normal_equations(const Trajectory& traj,
                                        const LTVFitConfig& cfg);

}  // namespace jacprop

#endif  // JACPROP_LTV_H_
