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

// Ground-truth plants: random stable linear systems and a two-link planar
// arm with gravity and viscous friction, plus exploration inputs, rollouts
// and reference Jacobians.

#ifndef JACPROP_BENCHMARKS_H_
#define JACPROP_BENCHMARKS_H_

#include <variant>

#include <Eigen/Dense>

#include "jacprop/linalg.h"
#include "jacprop/types.h"

namespace jacprop {

/// x+ = A x + B u.
struct LinearSystem {
  Matrix a;
  Matrix b;
  double dt = 0.1;

  Eigen::Index state_dim() const { return a.rows(); }
  Eigen::Index input_dim() const { return b.cols(); }
};

/// Two-link planar arm. Joint angles are measured from the horizontal, with
/// gravity along -y, so the arm hangs straight down at q = (-pi/2, 0).
struct RobotParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double lc1 = 0.5;  // joint to center of mass
  double lc2 = 0.5;
  double i1 = 1.0 / 12.0;  // rod inertia about the center of mass
  double i2 = 1.0 / 12.0;
  double g = 9.81;
  double b1 = 0.1;  // viscous friction
  double b2 = 0.1;
  double dt = 0.01;

  Eigen::Index state_dim() const { return 4; }
  Eigen::Index input_dim() const { return 2; }
  void validate() const;
};

using System = std::variant<LinearSystem, RobotParams>;

Eigen::Index state_dim(const System& system);
Eigen::Index input_dim(const System& system);
double sample_time(const System& system);

/// Random stable system: A0 ~ N(0, 1), A = expm(dt (A0 - A0^T - dt I)),
/// B ~ N(0, 1). Every eigenvalue of A has modulus exp(-dt^2).
LinearSystem random_linear_system(Eigen::Index n, Eigen::Index m, double dt,
                                  Seed seed);

Eigen::Matrix2d robot_mass_matrix(const Eigen::Vector2d& q,
                                  const RobotParams& p);
/// Coriolis and centrifugal torque C(q, qd) qd.
Eigen::Vector2d robot_coriolis(const Eigen::Vector2d& q,
                               const Eigen::Vector2d& qd,
                               const RobotParams& p);
Eigen::Vector2d robot_gravity(const Eigen::Vector2d& q, const RobotParams& p);
/// Kinetic plus potential energy.
double robot_energy(const Eigen::Vector4d& x, const RobotParams& p);

/// [qd, qdd] with qdd = -M^-1 (C qd + G + F qd - u).
Eigen::Vector4d robot_continuous_dynamics(const Eigen::Vector4d& x,
                                          const Eigen::Vector2d& u,
                                          const RobotParams& p);

Vector step(const LinearSystem& system, const Vector& x, const Vector& u);
/// One RK4 step of length p.dt with u held constant.
Vector step(const RobotParams& p, const Vector& x, const Vector& u);
Vector step(const System& system, const Vector& x, const Vector& u);

/// First-order low-pass filtered Gaussian noise, m x T:
/// u_t = a u_{t-1} + (1 - a) w_t, w_t ~ N(0, sigma^2 I), u_{-1} = 0.
Matrix lowpass_random_input(Eigen::Index length, Eigen::Index m, double pole,
                            double sigma, Seed seed);

/// Noise scale that gives the filtered input a unit stationary std.
double unit_variance_sigma(double pole);

/// Iterates step() over `inputs` starting from x0. Recorded states get
/// additive N(0, noise_std^2) noise; the dynamics evolve on clean states.
/// Throws DivergenceError when the clean state norm exceeds 1e6.
Trajectory rollout(const System& system, const Vector& x0,
                   const Matrix& inputs, double noise_std, Seed seed);

/// Exact [A B] for linear systems; central differences of step() for the
/// robot with h = 1e-6 max(1, |coordinate|).
JacobianMatrix true_jacobian(const System& system, const Vector& x,
                             const Vector& u);

}  // namespace jacprop

#endif  // JACPROP_BENCHMARKS_H_
