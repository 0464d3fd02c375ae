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

#ifndef JACPROP_TYPES_H_
#define JACPROP_TYPES_H_

#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "jacprop/errors.h"
#include "jacprop/linalg.h"

namespace jacprop {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// splitmix64 finalizer; derives independent stream seeds from a base seed.
inline Seed derive_seed(Seed base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Matrix of i.i.d. N(0, 1) draws, filled column by column.
inline Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  }
  return out;
}

/// Time-indexed states and inputs; column t holds x_t and u_t. The successor
/// of column t is column t + 1, so a trajectory of length T carries T - 1
/// transitions.
struct Trajectory {
  Matrix states;  // n x T
  Matrix inputs;  // m x T
  double dt = 0.0;

  Eigen::Index length() const { return states.cols(); }
  Eigen::Index state_dim() const { return states.rows(); }
  Eigen::Index input_dim() const { return inputs.rows(); }
  Eigen::Index transitions() const { return length() > 0 ? length() - 1 : 0; }

  void validate() const {
    if (states.cols() != inputs.cols()) {
      throw DimensionError("Trajectory: " + std::to_string(states.cols()) +
                           " states but " + std::to_string(inputs.cols()) +
                           " inputs");
    }
    if (states.cols() < 2) throw DimensionError("Trajectory: needs T >= 2");
    if (!states.allFinite() || !inputs.allFinite()) {
      throw DomainError("Trajectory: non-finite entry");
    }
  }
};

/// Input-output Jacobian [A | B] of a one-step map x+ = f(x, u).
struct JacobianMatrix {
  Matrix entries;  // n x (n + m)

  JacobianMatrix() = default;
  explicit JacobianMatrix(Matrix m) : entries(std::move(m)) {}
  JacobianMatrix(const Matrix& a, const Matrix& b)
      : entries(a.rows(), a.cols() + b.cols()) {
    entries << a, b;
  }

  Eigen::Index state_dim() const { return entries.rows(); }
  Eigen::Index input_dim() const { return entries.cols() - entries.rows(); }
  auto state_block() const { return entries.leftCols(state_dim()); }
  auto input_block() const { return entries.rightCols(input_dim()); }
};

}  // namespace jacprop

#endif  // JACPROP_TYPES_H_
