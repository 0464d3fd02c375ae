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


#include "jacprop/evaluation.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
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

// x+ = gain * x + offset, Jacobian [gain I, 0].
struct AffineModel {
  double gain = 1.0;
  double offset = 0.0;
  Eigen::Index m = 1;
};

Vector predict(const AffineModel& model, const Vector& x, const Vector&) {
  return (model.gain * x.array() + model.offset).matrix();
}

JacobianMatrix model_jacobian(const AffineModel& model, const Vector& x, const Vector&) {
  return JacobianMatrix(model.gain * Matrix::Identity(x.size(), x.size()),
                        Matrix::Zero(x.size(), model.m));
}

static_assert(DynamicsModel<AffineModel>);
static_assert(DynamicsModel<MLPModel>);
static_assert(DynamicsModel<Ensemble>);

MLPModel exact_model(const LinearSystem& sys) {
  MLPModel model = make_mlp(sys.state_dim(), sys.input_dim(), {4}, Activation::tanh,
                            ObjectiveForm::generalized(sys.a, sys.b), 1);
  for (Layer& l : model.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return model;
}

Trajectory linear_trajectory(const LinearSystem& sys, Eigen::Index length, Seed seed) {
  const Matrix u = lowpass_random_input(length, sys.input_dim(), 0.9, 1.0, seed);
  Rng rng(seed);
  return rollout(sys, standard_normal(sys.state_dim(), 1, rng), u, 0.0, 0);
}

MLPModel random_net(Eigen::Index n, Eigen::Index m, Rng& rng) {
  MLPModel model = make_mlp(n, m, {6}, Activation::tanh, ObjectiveForm::g(), rng());
  for (Layer& l : model.layers) l.bias = 0.1 * random_vector(l.bias.size(), rng);
  return model;
}

// Naive oracles: explicit element loops.
double naive_prediction_error(const MLPModel& model, const Trajectory& traj) {
  double sum = 0.0;
  long count = 0;
  for (Eigen::Index t = 0; t + 1 < traj.length(); ++t) {
    const Vector p = predict(model, traj.states.col(t), traj.inputs.col(t));
    for (Eigen::Index i = 0; i < traj.state_dim(); ++i) {
      const double e = traj.states(i, t + 1) - p(i);
      sum += e * e;
      ++count;
    }
  }
  return std::sqrt(sum / count);
}

double naive_simulation_error(const MLPModel& model, const Trajectory& traj) {
  Vector x = traj.states.col(0);
  double sum = 0.0;
  long count = 0;
  for (Eigen::Index t = 0; t + 1 < traj.length(); ++t) {
    x = predict(model, x, traj.inputs.col(t));
    for (Eigen::Index i = 0; i < traj.state_dim(); ++i) {
      const double e = traj.states(i, t + 1) - x(i);
      sum += e * e;
      ++count;
    }
  }
  return std::sqrt(sum / count);
}

double naive_jacobian_error(const std::vector<JacobianMatrix>& est,
                            const std::vector<JacobianMatrix>& truth) {
  double total = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    for (Eigen::Index i = 0; i < truth[t].entries.rows(); ++i) {
      for (Eigen::Index j = 0; j < truth[t].entries.cols(); ++j) {
        const double d = truth[t].entries(i, j) - est[t].entries(i, j);
        total += d * d;
      }
    }
  }
  return std::sqrt(total / static_cast<double>(truth.size()));
}

double naive_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TEST(PredictionError, ExactModelIsZero) {
  const LinearSystem sys = random_linear_system(4, 2, 0.1, 1);
  const Trajectory traj = linear_trajectory(sys, 100, 1);
  EXPECT_EQ(prediction_error(exact_model(sys), traj), 0.0);
}

TEST(PredictionError, ZeroModelOnZeroData) {
  MLPModel f = make_mlp(2, 1, {3}, Activation::tanh, ObjectiveForm::f(), 1);
  for (Layer& l : f.layers) l.weight.setZero();
  Trajectory traj{Matrix::Zero(2, 10), Matrix::Zero(1, 10), 0.1};
  EXPECT_EQ(prediction_error(f, traj), 0.0);
}

TEST(PredictionError, MatchesNaiveOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const LinearSystem sys = random_linear_system(3, 1, 0.1, 10 + trial);
    const Trajectory traj = linear_trajectory(sys, 50, trial);
    const MLPModel model = random_net(3, 1, rng);
    EXPECT_NEAR(prediction_error(model, traj), naive_prediction_error(model, traj), 1e-12);
  }
}

TEST(PredictionError, HandComputed) {
  Trajectory traj{Matrix(1, 3), Matrix::Zero(1, 3), 1.0};
  traj.states << 1.0, 3.0, 2.0;
  // gain 2: predictions 2, 6 against 3, 2 -> errors 1, 4.
  EXPECT_DOUBLE_EQ(prediction_error(AffineModel{2.0}, traj), std::sqrt(17.0 / 2.0));
}

TEST(SimulationError, ExactModel) {
  const LinearSystem sys = random_linear_system(4, 1, 0.1, 3);
  const Trajectory traj = linear_trajectory(sys, 100, 3);
  const SimulationResult r = simulation_error(exact_model(sys), traj);
  EXPECT_LT(r.rmse, 1e-12);
  EXPECT_FALSE(r.diverged);
  EXPECT_EQ(r.completed_steps, 99);
}

TEST(SimulationError, DoublingDiverges) {
  Trajectory traj{Matrix::Ones(2, 60), Matrix::Zero(1, 60), 0.1};
  const SimulationResult r = simulation_error(AffineModel{2.0}, traj);
  EXPECT_TRUE(r.diverged);
  const double threshold = 1e3 * std::sqrt(2.0);
  EXPECT_LE(r.completed_steps, static_cast<Eigen::Index>(std::ceil(std::log2(threshold))));
  EXPECT_GT(r.rmse, 0.0);
  EXPECT_LE(r.rmse, threshold);
}

TEST(SimulationError, ImmediateDivergenceReportsThreshold) {
  Trajectory traj{Matrix::Ones(1, 5), Matrix::Zero(1, 5), 0.1};
  const SimulationResult r = simulation_error(AffineModel{1e6}, traj);
  EXPECT_TRUE(r.diverged);
  EXPECT_EQ(r.completed_steps, 0);
  EXPECT_DOUBLE_EQ(r.rmse, 1e3);
  const SimulationResult nan = simulation_error(AffineModel{1.0, std::nan("")}, traj);
  EXPECT_TRUE(nan.diverged);
}

TEST(SimulationError, CustomFactor) {
  Trajectory traj{Matrix::Ones(1, 30), Matrix::Zero(1, 30), 0.1};
  const SimulationResult r = simulation_error(AffineModel{2.0}, traj, 10.0);
  EXPECT_TRUE(r.diverged);
  EXPECT_EQ(r.completed_steps, 3);  // 2, 4, 8 pass; 16 > 10
}

TEST(SimulationError, MatchesNaiveOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const LinearSystem sys = random_linear_system(3, 1, 0.1, 20 + trial);
    const Trajectory traj = linear_trajectory(sys, 50, trial);
    const MLPModel model = random_net(3, 1, rng);
    const SimulationResult r = simulation_error(model, traj);
    ASSERT_FALSE(r.diverged);
    EXPECT_NEAR(r.rmse, naive_simulation_error(model, traj), 1e-12);
  }
}

TEST(JacobianError, ZeroIffEqual) {
  Rng rng(5);
  std::vector<JacobianMatrix> truth;
  for (int t = 0; t < 5; ++t) truth.emplace_back(random_matrix(2, 3, rng));
  EXPECT_EQ(jacobian_error(truth, truth), 0.0);
  auto est = truth;
  est[3].entries(1, 2) += 1e-3;
  EXPECT_GT(jacobian_error(est, truth), 0.0);
}

TEST(JacobianError, SingleStepFrobenius) {
  Matrix diff(2, 2);
  diff << 1, 2, 3, 4;
  const std::vector<JacobianMatrix> est{JacobianMatrix(Matrix::Zero(2, 2))};
  const std::vector<JacobianMatrix> truth{JacobianMatrix(diff)};
  EXPECT_DOUBLE_EQ(jacobian_error(est, truth), std::sqrt(30.0));
}

TEST(JacobianError, MatchesNaiveOracleAndOrderInvariant) {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<JacobianMatrix> est, truth;
    for (int t = 0; t < 40; ++t) {
      est.emplace_back(random_matrix(3, 4, rng));
      truth.emplace_back(random_matrix(3, 4, rng));
    }
    const double value = jacobian_error(est, truth);
    EXPECT_NEAR(value, naive_jacobian_error(est, truth), 1e-12);
    std::vector<std::size_t> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<JacobianMatrix> pe, pt;
    for (std::size_t i : perm) {
      pe.push_back(est[i]);
      pt.push_back(truth[i]);
    }
    EXPECT_NEAR(jacobian_error(pe, pt), value, 1e-12);
  }
}

TEST(JacobianError, ModelOverload) {
  Rng rng(7);
  const LinearSystem sys = random_linear_system(3, 1, 0.1, 7);
  const Trajectory traj = linear_trajectory(sys, 30, 7);
  EXPECT_EQ(jacobian_error(exact_model(sys), System(sys), traj), 0.0);
  const Ensemble ens{{random_net(3, 1, rng), random_net(3, 1, rng)}};
  std::vector<JacobianMatrix> est;
  for (Eigen::Index t = 0; t + 1 < traj.length(); ++t) {
    const Vector x = traj.states.col(t), u = traj.inputs.col(t);
    est.emplace_back(Matrix(0.5 * (model_jacobian(ens.members[0], x, u).entries +
                                   model_jacobian(ens.members[1], x, u).entries)));
  }
  const auto truth = true_jacobians_along(System(sys), traj);
  EXPECT_NEAR(jacobian_error(ens, System(sys), traj), naive_jacobian_error(est, truth), 1e-12);
}

TEST(JacobianError, LengthMismatch) {
  const std::vector<JacobianMatrix> one{JacobianMatrix(Matrix::Zero(1, 2))};
  const std::vector<JacobianMatrix> two(2, JacobianMatrix(Matrix::Zero(1, 2)));
  EXPECT_THROW(jacobian_error(one, two), DimensionError);
}

TEST(Spectrum, ExactModelMatchesTruth) {
  const LinearSystem sys = random_linear_system(6, 1, 0.1, 8);
  const Trajectory traj = linear_trajectory(sys, 100, 8);
  const SpectrumReport report = spectrum_report(exact_model(sys), System(sys), traj, 5, 3);
  EXPECT_TRUE(report.notes.empty());
  ASSERT_EQ(report.entries.size(), 5u * 12u);
  for (int p = 0; p < 5; ++p) {
    std::vector<Complex> learned, truth;
    for (const auto& e : report.entries) {
      if (e.point != p) continue;
      (e.source == SpectrumEntry::Source::learned ? learned : truth).push_back(e.value);
    }
    EXPECT_LT(testing::multiset_distance(learned, truth), 1e-6);
    for (const Complex& v : truth) EXPECT_NEAR(std::abs(v), std::exp(-0.01), 1e-9);
  }
  EXPECT_NEAR(mean_modulus(report, SpectrumEntry::Source::truth), std::exp(-0.01), 1e-9);
  EXPECT_LT(mean_distance_to_truth(report), 1e-6);
}

TEST(Spectrum, ZeroWeightGFormIsOne) {
  const LinearSystem sys = random_linear_system(4, 1, 0.1, 9);
  const Trajectory traj = linear_trajectory(sys, 50, 9);
  MLPModel g = make_mlp(4, 1, {5}, Activation::elu, ObjectiveForm::g(), 1);
  for (Layer& l : g.layers) l.weight.setZero();
  const SpectrumReport report = spectrum_report(g, System(sys), traj, 3, 1);
  for (const auto& e : report.entries) {
    if (e.source == SpectrumEntry::Source::learned) {
      EXPECT_EQ(e.value, Complex(1.0, 0.0));
    }
  }
  EXPECT_EQ(mean_modulus(report, SpectrumEntry::Source::learned), 1.0);
  EXPECT_THROW(spectrum_report(g, System(sys), traj, 0, 1), ParameterError);
}

TEST(Spectrum, SummaryStatistics) {
  SpectrumReport report;
  using S = SpectrumEntry::Source;
  report.entries = {{0, S::learned, Complex(0.5, 0.0)}, {0, S::truth, Complex(1.0, 0.0)},
                    {0, S::truth, Complex(0.0, 1.0)},   {1, S::learned, Complex(0.0, 2.0)},
                    {1, S::truth, Complex(0.0, -1.0)}};
  EXPECT_DOUBLE_EQ(mean_modulus(report, S::learned), 1.25);
  // Point 0: nearest is 1 (distance 0.5). Point 1: only -i (distance 3).
  EXPECT_DOUBLE_EQ(mean_distance_to_truth(report), 1.75);
  EXPECT_TRUE(std::isnan(mean_distance_to_truth(SpectrumReport{})));
}

TEST(Spectrum, SampleBox) {
  Trajectory traj{Matrix(1, 3), Matrix(1, 3), 0.1};
  traj.states << 0.0, 2.0, 1.0;
  traj.inputs << -1.0, 1.0, 0.0;
  const SamplePoints pts = sample_state_space(traj, 500, 4);
  EXPECT_GE(pts.x.minCoeff(), -0.5);
  EXPECT_LE(pts.x.maxCoeff(), 2.5);
  EXPECT_LT(pts.x.minCoeff(), -0.4);
  EXPECT_GT(pts.x.maxCoeff(), 2.4);
  EXPECT_GE(pts.u.minCoeff(), -1.5);
  EXPECT_LE(pts.u.maxCoeff(), 1.5);
  EXPECT_EQ(sample_state_space(traj, 500, 4).x, pts.x);
}

MetricRecord fake_run(int run_id, Seed seed) {
  Rng rng(seed);
  MetricRecord r;
  r.arm = "fake";
  r.prediction_rmse = std::uniform_real_distribution<double>(0, 1)(rng);
  r.simulation_rmse = std::uniform_real_distribution<double>(0, 1)(rng);
  r.jacobian_error = std::uniform_real_distribution<double>(0, 1)(rng);
  r.diverged = run_id % 4 == 1;
  if (run_id % 7 == 6) throw std::runtime_error("boom " + std::to_string(run_id));
  return r;
}

TEST(MonteCarlo, OrderedAndParallelInvariant) {
  const auto serial = monte_carlo(fake_run, 23, 1, 100);
  for (int jobs : {2, 4, 16}) {
    const auto parallel = monte_carlo(fake_run, 23, jobs, 100);
    ASSERT_EQ(parallel.size(), serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
      EXPECT_EQ(parallel[i].run_id, static_cast<int>(i));
      EXPECT_EQ(parallel[i].seed, 100u + i);
      EXPECT_EQ(parallel[i].prediction_rmse, serial[i].prediction_rmse);
      EXPECT_EQ(parallel[i].failed, serial[i].failed);
      EXPECT_EQ(parallel[i].note, serial[i].note);
    }
  }
}

TEST(MonteCarlo, FailuresAreRecorded) {
  const auto records = monte_carlo(fake_run, 14, 3, 1);
  EXPECT_TRUE(records[6].failed);
  EXPECT_EQ(records[6].note, "boom 6");
  EXPECT_TRUE(records[13].failed);
  EXPECT_FALSE(records[5].failed);
  EXPECT_THROW(monte_carlo(fake_run, 0, 1, 1), ParameterError);
}

TEST(MonteCarlo, SingleRunReproducesRecord) {
  const auto records = monte_carlo(fake_run, 1, 1, 42);
  const MetricRecord direct = fake_run(0, 42);
  EXPECT_EQ(records[0].prediction_rmse, direct.prediction_rmse);
  EXPECT_EQ(records[0].jacobian_error, direct.jacobian_error);
}

TEST(Summary, MediansMatchSortOracle) {
  for (int n_runs : {5, 8, 23}) {
    const auto records = monte_carlo(fake_run, n_runs, 2, 7);
    const ArmSummary s = summarize("fake", records);
    std::vector<double> pred, sim, jac;
    int failed = 0, diverged = 0;
    for (const auto& r : records) {
      if (r.failed) {
        ++failed;
        continue;
      }
      diverged += r.diverged;
      pred.push_back(r.prediction_rmse);
      sim.push_back(r.simulation_rmse);
      jac.push_back(r.jacobian_error);
    }
    EXPECT_EQ(s.runs, n_runs);
    EXPECT_EQ(s.failed, failed);
    EXPECT_EQ(s.diverged, diverged);
    EXPECT_NEAR(s.prediction_rmse.median, naive_median(pred), 1e-12);
    EXPECT_NEAR(s.simulation_rmse.median, naive_median(sim), 1e-12);
    EXPECT_NEAR(s.jacobian_error.median, naive_median(jac), 1e-12);
    EXPECT_LE(s.jacobian_error.q1, s.jacobian_error.median);
    EXPECT_GE(s.jacobian_error.q3, s.jacobian_error.median);
  }
  const auto a = summarize("x", monte_carlo(fake_run, 9, 1, 3));
  const auto b = summarize("x", monte_carlo(fake_run, 9, 3, 3));
  EXPECT_EQ(a.jacobian_error.median, b.jacobian_error.median);
  EXPECT_EQ(a.prediction_rmse.iqr(), b.prediction_rmse.iqr());
}

TEST(Quantile, Interpolation) {
  EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0, 4.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0, 4.0}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({5.0}, 0.9), 5.0);
  EXPECT_DOUBLE_EQ(quantile({1.0, 9.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({1.0, 9.0}, 1.0), 9.0);
  EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
}

TEST(ParallelFor, VisitsEachIndexOnce) {
  for (int jobs : {1, 3, 50}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(37, jobs, [&](int i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  parallel_for(0, 4, [](int) { FAIL(); });
}

}  // namespace
}  // namespace jacprop
