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
#include <chrono>
#include <exception>
#include <limits>
#include <thread>

namespace jacprop {

double jacobian_error(std::span<const JacobianMatrix> estimated,
                      std::span<const JacobianMatrix> truth) {
  if (estimated.size() != truth.size()) {
    throw DimensionError("jacobian_error: " + std::to_string(estimated.size()) +
                         " estimates for " + std::to_string(truth.size()) +
                         " reference Jacobians");
  }
  if (truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    sum += (truth[t].entries - estimated[t].entries).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

std::vector<JacobianMatrix> true_jacobians_along(const System& system,
                                                 const Trajectory& traj) {
  std::vector<JacobianMatrix> out;
  out.reserve(traj.transitions());
  for (Eigen::Index t = 0; t < traj.transitions(); ++t) {
    out.push_back(true_jacobian(system, traj.states.col(t), traj.inputs.col(t)));
  }
  return out;
}

SamplePoints sample_state_space(const Trajectory& reference, int num_points,
                                Seed seed) {
  reference.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto draw = [&](const Matrix& data) {
    const Vector lo = data.rowwise().minCoeff();
    const Vector hi = data.rowwise().maxCoeff();
    const Vector center = 0.5 * (lo + hi);
    const Vector half = 0.75 * (hi - lo);
    Matrix out(data.rows(), num_points);
    for (int p = 0; p < num_points; ++p) {
      for (Eigen::Index i = 0; i < data.rows(); ++i) {
        out(i, p) = center(i) + half(i) * unit(rng);
      }
    }
    return out;
  };
  SamplePoints pts;
  pts.x = draw(reference.states);
  pts.u = draw(reference.inputs);
  return pts;
}

double mean_modulus(const SpectrumReport& report, SpectrumEntry::Source source) {
  double sum = 0.0;
  int count = 0;
  for (const auto& e : report.entries) {
    if (e.source != source) continue;
    sum += std::abs(e.value);
    ++count;
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / count;
}

double mean_distance_to_truth(const SpectrumReport& report) {
  double sum = 0.0;
  int count = 0;
  for (const auto& e : report.entries) {
    if (e.source != SpectrumEntry::Source::learned) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : report.entries) {
      if (t.point == e.point && t.source == SpectrumEntry::Source::truth) {
        best = std::min(best, std::abs(e.value - t.value));
      }
    }
    sum += best;
    ++count;
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / count;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (count <= 0) return;
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) body(i);
  };
  const int threads = std::clamp(jobs, 1, count);
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
}

std::vector<MetricRecord> monte_carlo(const RunFunction& run, int n_runs,
                                      int jobs, Seed base_seed) {
  if (n_runs < 1) throw ParameterError("monte_carlo: n_runs must be >= 1");
  std::vector<MetricRecord> records(static_cast<std::size_t>(n_runs));
  parallel_for(n_runs, jobs, [&](int i) {
    const Seed seed = base_seed + static_cast<Seed>(i);
    const auto start = std::chrono::steady_clock::now();
    MetricRecord rec;
    try {
      rec = run(i, seed);
    } catch (const std::exception& e) {
      rec = MetricRecord{};
      rec.failed = true;
      rec.note = e.what();
    }
    rec.run_id = i;
    rec.seed = seed;
    rec.wall_time = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    records[static_cast<std::size_t>(i)] = std::move(rec);
  });
  return records;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ArmSummary summarize(const std::string& arm,
                     const std::vector<MetricRecord>& records) {
  ArmSummary s;
  s.arm = arm;
  s.runs = static_cast<int>(records.size());
  std::vector<double> pred, sim, jac;
  for (const MetricRecord& r : records) {
    if (r.failed) {
      ++s.failed;
      continue;
    }
    if (r.diverged) ++s.diverged;
    pred.push_back(r.prediction_rmse);
    sim.push_back(r.simulation_rmse);
    jac.push_back(r.jacobian_error);
  }
  auto spread = [](const std::vector<double>& v) {
    return Spread{quantile(v, 0.5), quantile(v, 0.25), quantile(v, 0.75)};
  };
  s.prediction_rmse = spread(pred);
  s.simulation_rmse = spread(sim);
  s.jacobian_error = spread(jac);
  return s;
}

}  // namespace jacprop
