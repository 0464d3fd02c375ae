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

// Error metrics, eigenvalue-spectrum reports and the Monte-Carlo harness.

#ifndef JACPROP_EVALUATION_H_
#define JACPROP_EVALUATION_H_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jacprop/benchmarks.h"
#include "jacprop/linalg.h"
#include "jacprop/neural.h"
#include "jacprop/types.h"

namespace jacprop {

template <typename M>
concept DynamicsModel = requires(const M& model, const Vector& v) {
  { predict(model, v, v) } -> std::convertible_to<Vector>;
  { model_jacobian(model, v, v) } -> std::convertible_to<JacobianMatrix>;
};

/// Root mean square over steps and state dimensions of the one-step error.
template <DynamicsModel M>
double prediction_error(const M& model, const Trajectory& traj) {
  traj.validate();
  double sum = 0.0;
  for (Eigen::Index t = 0; t < traj.transitions(); ++t) {
    sum += (traj.states.col(t + 1) -
            predict(model, traj.states.col(t), traj.inputs.col(t)))
               .squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(traj.transitions() *
                                             traj.state_dim()));
}

struct SimulationResult {
  double rmse = 0.0;
  bool diverged = false;
  Eigen::Index completed_steps = 0;
};

inline constexpr double kDefaultDivergenceFactor = 1e3;

/// Free-run simulation from the first recorded state using the recorded
/// inputs. A simulated state whose norm exceeds divergence_factor times the
/// largest recorded state norm stops the run and flags divergence; the RMSE
/// then covers the completed prefix and is capped at that threshold.
template <DynamicsModel M>
SimulationResult simulation_error(
    const M& model, const Trajectory& traj,
    double divergence_factor = kDefaultDivergenceFactor) {
  traj.validate();
  const double threshold =
      divergence_factor * traj.states.colwise().norm().maxCoeff();
  SimulationResult out;
  Vector x = traj.states.col(0);
  double sum = 0.0;
  for (Eigen::Index t = 0; t < traj.transitions(); ++t) {
    x = predict(model, x, traj.inputs.col(t));
    if (!x.allFinite() || x.norm() > threshold) {
      out.diverged = true;
      break;
    }
    sum += (traj.states.col(t + 1) - x).squaredNorm();
    ++out.completed_steps;
  }
  if (out.completed_steps > 0) {
    out.rmse = std::sqrt(sum / static_cast<double>(out.completed_steps *
                                                   traj.state_dim()));
  }
  if (out.diverged) {
    out.rmse = out.completed_steps > 0 ? std::min(out.rmse, threshold) : threshold;
  }
  return out;
}

/// sqrt(1/T sum_t ||J_t - Jhat_t||_F^2).
double jacobian_error(std::span<const JacobianMatrix> estimated,
                      std::span<const JacobianMatrix> truth);

/// Model Jacobians at each transition of `traj`.
template <DynamicsModel M>
std::vector<JacobianMatrix> jacobians_along(const M& model,
                                            const Trajectory& traj) {
  std::vector<JacobianMatrix> out;
  out.reserve(traj.transitions());
  for (Eigen::Index t = 0; t < traj.transitions(); ++t) {
    out.push_back(model_jacobian(model, traj.states.col(t), traj.inputs.col(t)));
  }
  return out;
}

std::vector<JacobianMatrix> true_jacobians_along(const System& system,
                                                 const Trajectory& traj);

template <DynamicsModel M>
double jacobian_error(const M& model, const System& system,
                      const Trajectory& traj) {
  const auto est = jacobians_along(model, traj);
  const auto truth = true_jacobians_along(system, traj);
  return jacobian_error(est, truth);
}

struct SpectrumEntry {
  enum class Source { learned, truth };

  int point = 0;
  Source source = Source::learned;
  Complex value;
};

struct SpectrumReport {
  std::vector<SpectrumEntry> entries;
  std::vector<std::string> notes;  // skipped points
};

/// Mean |lambda| over all entries from `source`. NaN if there are none.
double mean_modulus(const SpectrumReport& report, SpectrumEntry::Source source);

/// Mean over learned eigenvalues of the distance to the nearest true
/// eigenvalue at the same point. NaN if there are no learned entries.
double mean_distance_to_truth(const SpectrumReport& report);

/// Uniform samples of (x, u) inside the bounding box of `reference`, grown
/// 1.5x about its center. One column per point.
struct SamplePoints {
  Matrix x;
  Matrix u;
};
SamplePoints sample_state_space(const Trajectory& reference, int num_points,
                                Seed seed);

/// Eigenvalues of the state block A of learned and true Jacobians at sampled
/// points. Points where either eigenvalue problem fails are skipped with a
/// note.
template <DynamicsModel M>
SpectrumReport spectrum_report(const M& model, const System& system,
                               const Trajectory& reference, int num_points,
                               Seed seed) {
  if (num_points < 1) throw ParameterError("spectrum_report: num_points must be >= 1");
  const SamplePoints pts = sample_state_space(reference, num_points, seed);
  SpectrumReport report;
  for (int p = 0; p < num_points; ++p) {
    const Vector x = pts.x.col(p), u = pts.u.col(p);
    try {
      const auto learned = eigenvalues(model_jacobian(model, x, u).state_block());
      const auto truth = eigenvalues(true_jacobian(system, x, u).state_block());
      for (const Complex& v : learned) {
        report.entries.push_back({p, SpectrumEntry::Source::learned, v});
      }
      for (const Complex& v : truth) {
        report.entries.push_back({p, SpectrumEntry::Source::truth, v});
      }
    } catch (const ConvergenceError& e) {
      report.notes.push_back("point " + std::to_string(p) + ": " + e.what());
    }
  }
  return report;
}

/// One Monte-Carlo replication.
struct MetricRecord {
  int run_id = 0;
  Seed seed = 0;
  std::string arm;
  std::string objective;
  bool tangent = false;
  double weight_decay = 0.0;
  double dropout = 0.0;
  double prediction_rmse = 0.0;
  double simulation_rmse = 0.0;
  bool diverged = false;
  double jacobian_error = 0.0;
  double wall_time = 0.0;  // seconds
  bool failed = false;
  std::string note;
};

/// Calls body(i) for i < count on up to `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& body);

using RunFunction = std::function<MetricRecord(int run_id, Seed seed)>;

/// Runs run(i, base_seed + i) for i < n_runs on up to `jobs` threads. A run
/// that throws yields a record with failed = true and the message as note.
/// The result is ordered by run_id whatever the job count.
std::vector<MetricRecord> monte_carlo(const RunFunction& run, int n_runs,
                                      int jobs, Seed base_seed);

/// Linear-interpolation quantile of unsorted data (p in [0, 1]).
double quantile(std::vector<double> values, double p);

struct Spread {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

struct ArmSummary {
  std::string arm;
  int runs = 0;
  int failed = 0;
  int diverged = 0;
  Spread prediction_rmse;
  Spread simulation_rmse;
  Spread jacobian_error;
};

/// Statistics over the records that did not fail.
ArmSummary summarize(const std::string& arm,
                     const std::vector<MetricRecord>& records);

}  // namespace jacprop

#endif  // JACPROP_EVALUATION_H_
