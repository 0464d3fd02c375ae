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

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "jacprop/benchmarks.h"
#include "jacprop/errors.h"
#include "test_util.h"

namespace jacprop {
namespace {

using testing::random_matrix;
using testing::random_vector;

Trajectory lti_data(Eigen::Index n, Eigen::Index m, Eigen::Index length, Seed seed,
                    LinearSystem* out = nullptr) {
  const LinearSystem sys = random_linear_system(n, m, 0.1, seed);
  if (out != nullptr) *out = sys;
  Rng rng(seed);
  const Matrix u = standard_normal(m, length, rng);
  return rollout(sys, standard_normal(n, 1, rng), u, 0.0, 0);
}

// Least squares [A B] from the stacked regression, solved by QR.
Matrix qr_least_squares(const Trajectory& traj) {
  const Eigen::Index steps = traj.transitions();
  Matrix phi(steps, traj.state_dim() + traj.input_dim());
  phi << traj.states.leftCols(steps).transpose(),
      traj.inputs.leftCols(steps).transpose();
  const Matrix target = traj.states.rightCols(steps).transpose();
  return phi.colPivHouseholderQr().solve(target).transpose();
}

TEST(FitLtv, RecoversLtiLeastSquares) {
  LinearSystem sys;
  const Trajectory traj = lti_data(4, 2, 200, 3, &sys);
  const LTVModel model = fit_ltv(traj, {1e4, 0.0});
  const Matrix oracle = qr_least_squares(traj);
  ASSERT_EQ(model.length(), 199);
  double worst = 0.0, worst_truth = 0.0;
  for (Eigen::Index t = 0; t < model.length(); ++t) {
    worst = std::max(worst, (model.jacobian(t).entries - oracle).cwiseAbs().maxCoeff());
    worst_truth = std::max(
        worst_truth, (model.jacobian(t).entries - JacobianMatrix(sys.a, sys.b).entries)
                         .cwiseAbs()
                         .maxCoeff());
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_LT(worst_truth, 1e-6);
}

TEST(FitLtv, PredictsTrainingData) {
  const Trajectory traj = lti_data(3, 1, 100, 4);
  const LTVModel model = fit_ltv(traj, {1e4, 0.0});
  for (Eigen::Index t = 0; t < model.length(); ++t) {
    const Vector pred = ltv_predict(model, traj.states.col(t), traj.inputs.col(t), t);
    EXPECT_LT((pred - traj.states.col(t + 1)).norm(), 1e-6);
  }
}

TEST(FitLtv, HugeLambdaIsConstant) {
  Trajectory traj = lti_data(3, 1, 100, 5);
  Rng rng(5);
  traj.states += 0.1 * standard_normal(3, 100, rng);
  const LTVModel model = fit_ltv(traj, {1e8, 1e-3});
  double worst = 0.0;
  for (Eigen::Index t = 0; t + 1 < model.length(); ++t) {
    worst = std::max(worst, (model.k(t + 1) - model.k(t)).norm());
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(FitLtv, ZeroDataWithRidgeIsZero) {
  Trajectory traj;
  traj.states = Matrix::Zero(2, 20);
  traj.inputs = Matrix::Zero(1, 20);
  traj.dt = 1.0;
  const LTVModel model = fit_ltv(traj, {10.0, 1e-3});
  for (Eigen::Index t = 0; t < model.length(); ++t) EXPECT_EQ(model.k(t), Vector::Zero(6));
}

TEST(FitLtv, NormalEquationsResidual) {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    Trajectory traj;
    traj.states = random_matrix(3, 60, rng);
    traj.inputs = random_matrix(2, 60, rng);
    const LTVFitConfig cfg{0.5 + trial, 1e-3};
    const LTVModel model = fit_ltv(traj, cfg);
    const LTVNormalEquations eq = ltv_normal_equations(traj, cfg);
    Matrix k(eq.rhs.rows(), eq.rhs.cols());
    const Eigen::Index d = 5;
    for (Eigen::Index t = 0; t < model.length(); ++t) {
      k.middleRows(t * d, d) = model.jacobian(t).entries.transpose();
    }
    const Matrix residual = eq.lhs.dense() * k - eq.rhs;
    EXPECT_LT(residual.norm(), 1e-8 * eq.rhs.norm());
  }
}

// Assembles the normal equations of the stacked least-squares problem
// directly and compares them with the block form.
TEST(FitLtv, NormalEquationsMatchStackedProblem) {
  Rng rng(7);
  Trajectory traj;
  traj.states = random_matrix(2, 6, rng);
  traj.inputs = random_matrix(1, 6, rng);
  const LTVFitConfig cfg{1.7, 0.3};
  const Eigen::Index n = 2, d = 3, steps = 5, unknowns = steps * n * d;
  // Unknown vector: for each t, k_t = rows of [A_t B_t].
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  auto add = [&](Eigen::VectorXd r, double y) {
    rows.push_back(std::move(r));
    rhs.push_back(y);
  };
  for (Eigen::Index t = 0; t < steps; ++t) {
    Vector phi(d);
    phi << traj.states.col(t), traj.inputs.col(t);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(unknowns);
      r.segment(t * n * d + i * d, d) = phi;
      add(r, traj.states(i, t + 1));
    }
    for (Eigen::Index j = 0; j < n * d; ++j) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(unknowns);
      r(t * n * d + j) = cfg.prior_scale;
      add(r, 0.0);
      if (t + 1 < steps) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(unknowns);
        s((t + 1) * n * d + j) = cfg.lambda;
        s(t * n * d + j) = -cfg.lambda;
        add(s, 0.0);
      }
    }
  }
  Matrix design(rows.size(), unknowns);
  Vector y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    design.row(r) = rows[r].transpose();
    y(r) = rhs[r];
  }
  const Vector oracle = design.colPivHouseholderQr().solve(y);
  const LTVModel model = fit_ltv(traj, cfg);
  for (Eigen::Index t = 0; t < steps; ++t) {
    EXPECT_LT((model.k(t) - oracle.segment(t * n * d, n * d)).cwiseAbs().maxCoeff(), 1e-10);
  }
  // The objective is the squared norm of the stacked residual.
  EXPECT_NEAR(ltv_objective(traj, model, cfg), (design * oracle - y).squaredNorm(), 1e-10);
}

TEST(FitLtv, BeatsConstantLeastSquares) {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    Trajectory traj;
    traj.states = random_matrix(3, 80, rng);
    traj.inputs = random_matrix(1, 80, rng);
    const LTVFitConfig cfg{2.0, 1e-2};
    const LTVModel fitted = fit_ltv(traj, cfg);
    const JacobianMatrix lti = fit_lti(traj);
    LTVModel constant;
    for (Eigen::Index t = 0; t < traj.transitions(); ++t) {
      constant.a.push_back(lti.state_block());
      constant.b.push_back(lti.input_block());
    }
    EXPECT_LE(ltv_objective(traj, fitted, cfg), ltv_objective(traj, constant, cfg));
  }
}

TEST(FitLtv, TracksSmoothlyVaryingSystem) {
  const Eigen::Index n = 2, m = 1, length = 400;
  Rng rng(9);
  auto truth = [](double s) {
    Matrix j(2, 3);
    j << 0.9 * std::cos(0.3 * s), 0.2, 0.5,
         -0.2, 0.8 + 0.1 * std::sin(s), 1.0 - 0.5 * s / 4.0;
    return j;
  };
  Trajectory traj;
  traj.states.resize(n, length);
  traj.inputs = standard_normal(m, length, rng);
  traj.states.col(0) = random_vector(n, rng);
  for (Eigen::Index t = 0; t + 1 < length; ++t) {
    const Matrix j = truth(4.0 * t / length);
    traj.states.col(t + 1) = j.leftCols(n) * traj.states.col(t) + j.rightCols(m) * traj.inputs.col(t);
  }
  std::vector<double> errors;
  for (double lambda : {0.1, 1.0, 10.0, 100.0, 1e4}) {
    const LTVModel model = fit_ltv(traj, {lambda, 1e-3});
    double sum = 0.0;
    for (Eigen::Index t = 0; t < model.length(); ++t) {
      sum += (model.jacobian(t).entries - truth(4.0 * t / length)).squaredNorm();
    }
    errors.push_back(std::sqrt(sum / model.length()));
    ::testing::Test::RecordProperty("rms_lambda_" + std::to_string(lambda), std::to_string(errors.back()));
  }
  const double best = *std::min_element(errors.begin(), errors.end());
  EXPECT_LT(best, errors.back());
  EXPECT_LT(best, 0.1);
}

TEST(FitLtv, Errors) {
  Trajectory traj;
  traj.states = Matrix::Zero(2, 20);
  traj.inputs = Matrix::Zero(1, 20);
  EXPECT_THROW(fit_ltv(traj, {0.0, 0.0}), RankDeficiencyError);
  EXPECT_THROW(fit_ltv(traj, {-1.0, 0.0}), ParameterError);
  EXPECT_THROW(fit_ltv(traj, {1.0, -1.0}), ParameterError);
  traj.states = Matrix::Zero(2, 2);
  traj.inputs = Matrix::Zero(1, 2);
  EXPECT_THROW(fit_ltv(traj, {1.0, 1.0}), DimensionError);
}

TEST(FitLtv, SingleRegressorDirectionIsRankDeficient) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Trajectory traj;
    const Matrix w = random_matrix(1, 30, rng);
    traj.states = random_vector(2, rng) * w;
    traj.inputs = random_vector(1, rng) * w;
    EXPECT_THROW(fit_ltv(traj, {0.0, 0.0}), RankDeficiencyError);
  }
}

TEST(LtvPredict, BoundsAndZero) {
  const Trajectory traj = lti_data(3, 1, 30, 10);
  const LTVModel model = fit_ltv(traj, {10.0, 1e-3});
  EXPECT_EQ(ltv_predict(model, Vector::Zero(3), Vector::Zero(1), 0), Vector::Zero(3));
  EXPECT_NO_THROW(ltv_predict(model, Vector::Zero(3), Vector::Zero(1), model.length() - 1));
  EXPECT_THROW(ltv_predict(model, Vector::Zero(3), Vector::Zero(1), model.length()), IndexError);
  EXPECT_THROW(ltv_predict(model, Vector::Zero(3), Vector::Zero(1), -1), IndexError);
  EXPECT_THROW(ltv_predict(model, Vector::Zero(2), Vector::Zero(1), 0), DimensionError);
}

TEST(LtvModel, KLayout) {
  LTVModel model;
  Matrix a(2, 2), b(2, 1);
  a << 1, 2, 3, 4;
  b << 5, 6;
  model.a = {a};
  model.b = {b};
  Vector expected(6);
  expected << 1, 2, 5, 3, 4, 6;
  EXPECT_EQ(model.k(0), expected);
}

TEST(FitLti, MatchesQrOracle) {
  Rng rng(11);
  Trajectory traj;
  traj.states = random_matrix(3, 50, rng);
  traj.inputs = random_matrix(2, 50, rng);
  EXPECT_LT((fit_lti(traj).entries - qr_least_squares(traj)).cwiseAbs().maxCoeff(), 1e-10);
  traj.inputs.setZero();
  EXPECT_THROW(fit_lti(traj), RankDeficiencyError);
}

}  // namespace
}  // namespace jacprop
