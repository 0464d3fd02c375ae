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

// File formats: JSON for systems, LTV models and networks; CSV for
// trajectories, Monte-Carlo records and spectra.

#ifndef JACPROP_IO_H_
#define JACPROP_IO_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "jacprop/benchmarks.h"
#include "jacprop/evaluation.h"
#include "jacprop/ltv.h"
#include "jacprop/neural.h"
#include "jacprop/types.h"

namespace jacprop {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

Json matrix_to_json(const Matrix& m);  // row-major nested arrays
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const LinearSystem& s);
LinearSystem linear_system_from_json(const Json& j);
Json to_json(const RobotParams& p);
RobotParams robot_params_from_json(const Json& j);
Json to_json(const System& s);
System system_from_json(const Json& j);

/// dims, dt and one flattened k_t row per step.
Json to_json(const LTVModel& model);
LTVModel ltv_model_from_json(const Json& j);

/// dims, objective form, activation, standardization and flattened
/// (row-major) layer weights.
Json to_json(const MLPModel& model);
MLPModel mlp_model_from_json(const Json& j);
Json to_json(const Ensemble& ens);
Ensemble ensemble_from_json(const Json& j);

/// Header `t,x1..xn,u1..um`; one row per time step.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
/// Reads the CSV written above. dt is not part of the CSV.
Trajectory read_trajectory_csv(std::istream& in, double dt);

/// Writes `<path>` and the sidecar `<path>.json` with dt, system, seed and
/// noise scale.
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj,
                     const Json& system, Seed seed, double noise_std);
/// Loads a trajectory; dt comes from the sidecar when present.
Trajectory load_trajectory(const std::filesystem::path& path);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

/// run_id,seed,arm,objective,tangent,weight_decay,dropout,prediction_rmse,
/// simulation_rmse,diverged,jacobian_error,failed,note. Wall time is
/// excluded so reruns produce identical files.
void write_records_csv(std::ostream& out, const std::vector<MetricRecord>& records);
Json to_json(const ArmSummary& s);
/// point,source,re,im
void write_spectrum_csv(std::ostream& out, const SpectrumReport& report);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace jacprop

#endif  // JACPROP_IO_H_
