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

#include "jacprop/io.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace jacprop {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("matrix: expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw ConfigError("matrix: ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Json to_json(const LinearSystem& s) {
  Json j;
  j["type"] = "linear";
  j["n"] = s.state_dim();
  j["m"] = s.input_dim();
  j["dt"] = s.dt;
  j["A"] = matrix_to_json(s.a);
  j["B"] = matrix_to_json(s.b);
  return j;
}

LinearSystem linear_system_from_json(const Json& j) {
  LinearSystem s;
  s.a = matrix_from_json(j.at("A"));
  s.b = matrix_from_json(j.at("B"));
  s.dt = j.at("dt").get<double>();
  if (s.a.rows() != s.a.cols() || s.b.rows() != s.a.rows()) {
    throw ConfigError("linear system: A must be n x n and B n x m");
  }
  return s;
}

Json to_json(const RobotParams& p) {
  Json j;
  j["type"] = "robot";
  j["m1"] = p.m1;
  j["m2"] = p.m2;
  j["l1"] = p.l1;
  j["l2"] = p.l2;
  j["lc1"] = p.lc1;
  j["lc2"] = p.lc2;
  j["i1"] = p.i1;
  j["i2"] = p.i2;
  j["g"] = p.g;
  j["b1"] = p.b1;
  j["b2"] = p.b2;
  j["dt"] = p.dt;
  return j;
}

RobotParams robot_params_from_json(const Json& j) {
  RobotParams p;
  p.m1 = j.value("m1", p.m1);
  p.m2 = j.value("m2", p.m2);
  p.l1 = j.value("l1", p.l1);
  p.l2 = j.value("l2", p.l2);
  p.lc1 = j.value("lc1", p.lc1);
  p.lc2 = j.value("lc2", p.lc2);
  p.i1 = j.value("i1", p.i1);
  p.i2 = j.value("i2", p.i2);
  p.g = j.value("g", p.g);
  p.b1 = j.value("b1", p.b1);
  p.b2 = j.value("b2", p.b2);
  p.dt = j.value("dt", p.dt);
  p.validate();
  return p;
}

Json to_json(const System& s) {
  return std::visit([](const auto& sys) { return to_json(sys); }, s);
}

System system_from_json(const Json& j) {
  const std::string type = j.value("type", "linear");
  if (type == "linear") return linear_system_from_json(j);
  if (type == "robot") return robot_params_from_json(j);
  throw ConfigError("unknown system type '" + type + "'");
}

Json to_json(const LTVModel& model) {
  Json j;
  j["n"] = model.state_dim();
  j["m"] = model.input_dim();
  j["dt"] = model.dt;
  j["layout"] = "k_t = rows of [A_t B_t] concatenated";
  Json ks = Json::array();
  for (Eigen::Index t = 0; t < model.length(); ++t) {
    ks.push_back(vector_to_json(model.k(t)));
  }
  j["k"] = std::move(ks);
  return j;
}

LTVModel ltv_model_from_json(const Json& j) {
  const auto n = j.at("n").get<Eigen::Index>();
  const auto m = j.at("m").get<Eigen::Index>();
  LTVModel model;
  model.dt = j.at("dt").get<double>();
  for (const Json& row : j.at("k")) {
    const Vector k = vector_from_json(row);
    if (k.size() != n * (n + m)) throw ConfigError("ltv model: bad k_t length");
    Matrix a(n, n), b(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      a.row(i) = k.segment(i * (n + m), n).transpose();
      b.row(i) = k.segment(i * (n + m) + n, m).transpose();
    }
    model.a.push_back(std::move(a));
    model.b.push_back(std::move(b));
  }
  return model;
}

Json to_json(const MLPModel& model) {
  Json j;
  j["n"] = model.state_dim;
  j["m"] = model.input_dim;
  j["activation"] = std::string(to_string(model.activation));
  Json obj;
  obj["kind"] = std::string(to_string(model.objective.kind));
  if (model.objective.kind == ObjectiveForm::Kind::generalized) {
    obj["A0"] = matrix_to_json(model.objective.a0);
    obj["B0"] = matrix_to_json(model.objective.b0);
  }
  if (model.objective.kind == ObjectiveForm::Kind::tau_shift) {
    obj["tau"] = vector_to_json(model.objective.tau);
  }
  j["objective"] = std::move(obj);
  j["dropout"] = model.dropout_rate;
  Json stats;
  if (!model.standardization.empty()) {
    stats["mean"] = vector_to_json(model.standardization.mean);
    stats["scale"] = vector_to_json(model.standardization.scale);
  }
  j["standardization"] = std::move(stats);
  Json layers = Json::array();
  for (const Layer& l : model.layers) {
    Json lj;
    lj["rows"] = l.weight.rows();
    lj["cols"] = l.weight.cols();
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        rm = l.weight;
    lj["weight"] = std::vector<double>(rm.data(), rm.data() + rm.size());
    lj["bias"] = vector_to_json(l.bias);
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

MLPModel mlp_model_from_json(const Json& j) {
  MLPModel model;
  model.state_dim = j.at("n").get<Eigen::Index>();
  model.input_dim = j.at("m").get<Eigen::Index>();
  model.activation = parse_activation(j.at("activation").get<std::string>());
  const Json& obj = j.at("objective");
  model.objective.kind = parse_objective_kind(obj.at("kind").get<std::string>());
  if (obj.contains("A0")) model.objective.a0 = matrix_from_json(obj["A0"]);
  if (obj.contains("B0")) model.objective.b0 = matrix_from_json(obj["B0"]);
  if (obj.contains("tau")) model.objective.tau = vector_from_json(obj["tau"]);
  model.dropout_rate = j.value("dropout", 0.0);
  const Json& stats = j.at("standardization");
  if (stats.contains("mean")) {
    model.standardization.mean = vector_from_json(stats["mean"]);
    model.standardization.scale = vector_from_json(stats["scale"]);
  }
  for (const Json& lj : j.at("layers")) {
    const auto rows = lj.at("rows").get<Eigen::Index>();
    const auto cols = lj.at("cols").get<Eigen::Index>();
    const auto flat = lj.at("weight").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
      throw ConfigError("model: weight size does not match rows x cols");
    }
    Layer layer;
    layer.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                  Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), rows, cols);
    layer.bias = vector_from_json(lj.at("bias"));
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

Json to_json(const Ensemble& ens) {
  Json j;
  Json members = Json::array();
  for (const MLPModel& m : ens.members) members.push_back(to_json(m));
  j["members"] = std::move(members);
  return j;
}

Ensemble ensemble_from_json(const Json& j) {
  Ensemble ens;
  for (const Json& m : j.at("members")) ens.members.push_back(mlp_model_from_json(m));
  return ens;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t";
  for (Eigen::Index i = 0; i < traj.state_dim(); ++i) out << ",x" << i + 1;
  for (Eigen::Index i = 0; i < traj.input_dim(); ++i) out << ",u" << i + 1;
  out << "\n";
  for (Eigen::Index t = 0; t < traj.length(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < traj.state_dim(); ++i) {
      out << ',' << format_double(traj.states(i, t));
    }
    for (Eigen::Index i = 0; i < traj.input_dim(); ++i) {
      out << ',' << format_double(traj.inputs(i, t));
    }
    out << "\n";
  }
}

Trajectory read_trajectory_csv(std::istream& in, double dt) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trajectory csv: empty file");
  const auto header = split_csv_line(line);
  Eigen::Index n = 0, m = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (!header[c].empty() && header[c][0] == 'x') {
      ++n;
    } else if (!header[c].empty() && header[c][0] == 'u') {
      ++m;
    } else {
      throw ConfigError("trajectory csv: unexpected column '" + header[c] + "'");
    }
  }
  if (header.empty() || header[0] != "t") {
    throw ConfigError("trajectory csv: first column must be 't'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ConfigError("trajectory csv: row has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(header.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 1; c < fields.size(); ++c) row.push_back(parse_double(fields[c]));
    rows.push_back(std::move(row));
  }
  Trajectory traj;
  traj.dt = dt;
  const auto length = static_cast<Eigen::Index>(rows.size());
  traj.states.resize(n, length);
  traj.inputs.resize(m, length);
  for (Eigen::Index t = 0; t < length; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) traj.states(i, t) = rows[t][i];
    for (Eigen::Index i = 0; i < m; ++i) traj.inputs(i, t) = rows[t][n + i];
  }
  return traj;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj,
                     const Json& system, Seed seed, double noise_std) {
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  write_text_file(path, csv.str());
  Json side;
  side["dt"] = traj.dt;
  side["system"] = system;
  side["seed"] = seed;
  side["noise_std"] = noise_std;
  write_json_file(std::filesystem::path(path.string() + ".json"), side);
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  double dt = 0.0;
  const std::filesystem::path side(path.string() + ".json");
  if (std::filesystem::exists(side)) dt = read_json_file(side).value("dt", 0.0);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_trajectory_csv(in, dt);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_records_csv(std::ostream& out, const std::vector<MetricRecord>& records) {
  out << "run_id,seed,arm,objective,tangent,weight_decay,dropout,prediction_rmse,"
         "simulation_rmse,diverged,jacobian_error,failed,note\r\n";
  for (const MetricRecord& r : records) {
    out << r.run_id << ',' << r.seed << ',' << csv_field(r.arm) << ','
        << csv_field(r.objective) << ',' << (r.tangent ? 1 : 0) << ','
        << format_double(r.weight_decay) << ',' << format_double(r.dropout) << ','
        << format_double(r.prediction_rmse) << ','
        << format_double(r.simulation_rmse) << ',' << (r.diverged ? 1 : 0) << ','
        << format_double(r.jacobian_error) << ',' << (r.failed ? 1 : 0) << ','
        << csv_field(r.note) << "\r\n";
  }
}

Json to_json(const ArmSummary& s) {
  auto spread = [](const Spread& sp) {
    Json j;
    j["median"] = sp.median;
    j["q1"] = sp.q1;
    j["q3"] = sp.q3;
    j["iqr"] = sp.iqr();
    return j;
  };
  Json j;
  j["arm"] = s.arm;
  j["runs"] = s.runs;
  j["failed"] = s.failed;
  j["diverged"] = s.diverged;
  j["prediction_rmse"] = spread(s.prediction_rmse);
  j["simulation_rmse"] = spread(s.simulation_rmse);
  j["jacobian_error"] = spread(s.jacobian_error);
  return j;
}

void write_spectrum_csv(std::ostream& out, const SpectrumReport& report) {
  out << "point,source,re,im\r\n";
  for (const SpectrumEntry& e : report.entries) {
    out << e.point << ','
        << (e.source == SpectrumEntry::Source::learned ? "learned" : "true") << ','
        << format_double(e.value.real()) << ',' << format_double(e.value.imag())
        << "\r\n";
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace jacprop
