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

#include "jacprop/benchmarks.h"

#include <cmath>
#include <string>

namespace jacprop {
namespace {

constexpr double kDivergenceNorm = 1e6;

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dims(const char* op, const Vector& x, Eigen::Index n,
                const Vector& u, Eigen::Index m) {
  if (x.size() != n || u.size() != m) {
    throw DimensionError(std::string(op) + ": got x of size " +
                         std::to_string(x.size()) + " and u of size " +
                         std::to_string(u.size()) + ", expected " +
                         std::to_string(n) + " and " + std::to_string(m));
  }
}

}  // namespace

void RobotParams::validate() const {
  if (!(m1 > 0 && m2 > 0 && l1 > 0 && l2 > 0 && lc1 > 0 && lc2 > 0 &&
        dt > 0)) {
    throw ParameterError("RobotParams: masses, lengths and dt must be positive");
  }
  if (!(i1 >= 0 && i2 >= 0 && b1 >= 0 && b2 >= 0)) {
    throw ParameterError("RobotParams: inertias and friction must be >= 0");
  }
}

Eigen::Index state_dim(const System& system) {
  return std::visit([](const auto& s) { return s.state_dim(); }, system);
}

Eigen::Index input_dim(const System& system) {
  return std::visit([](const auto& s) { return s.input_dim(); }, system);
}

double sample_time(const System& system) {
  return std::visit([](const auto& s) { return s.dt; }, system);
}

LinearSystem random_linear_system(Eigen::Index n, Eigen::Index m, double dt,
                                  Seed seed) {
  if (n < 1 || m < 1) {
    throw DimensionError("random_linear_system: n and m must be >= 1");
  }
  if (!(dt > 0)) throw ParameterError("random_linear_system: dt must be > 0");
  Rng rng(seed);
  const Matrix a0 = standard_normal(n, n, rng);
  Matrix a = a0 - a0.transpose();
  a -= dt * Matrix::Identity(n, n);
  LinearSystem sys;
  sys.a = mat_exp(dt * a);
  sys.b = standard_normal(n, m, rng);
  sys.dt = dt;
  return sys;
}

Eigen::Matrix2d robot_mass_matrix(const Eigen::Vector2d& q,
                                  const RobotParams& p) {
  const double c2 = std::cos(q(1));
  const double m22 = p.m2 * p.lc2 * p.lc2 + p.i2;
  const double m12 = m22 + p.m2 * p.l1 * p.lc2 * c2;
  const double m11 = p.m1 * p.lc1 * p.lc1 + p.i1 +
                     p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 +
                             2.0 * p.l1 * p.lc2 * c2) +
                     p.i2;
  Eigen::Matrix2d mass;
  mass << m11, m12, m12, m22;
  return mass;
}

Eigen::Vector2d robot_coriolis(const Eigen::Vector2d& q,
                               const Eigen::Vector2d& qd,
                               const RobotParams& p) {
  const double h = p.m2 * p.l1 * p.lc2 * std::sin(q(1));
  return {-h * (2.0 * qd(0) * qd(1) + qd(1) * qd(1)), h * qd(0) * qd(0)};
}

Eigen::Vector2d robot_gravity(const Eigen::Vector2d& q, const RobotParams& p) {
  const double c1 = std::cos(q(0));
  const double c12 = std::cos(q(0) + q(1));
  return {(p.m1 * p.lc1 + p.m2 * p.l1) * p.g * c1 + p.m2 * p.lc2 * p.g * c12,
          p.m2 * p.lc2 * p.g * c12};
}

double robot_energy(const Eigen::Vector4d& x, const RobotParams& p) {
  const Eigen::Vector2d q = x.head<2>();
  const Eigen::Vector2d qd = x.tail<2>();
  const double kinetic = 0.5 * qd.dot(robot_mass_matrix(q, p) * qd);
  const double potential =
      p.g * (p.m1 * p.lc1 * std::sin(q(0)) +
             p.m2 * (p.l1 * std::sin(q(0)) + p.lc2 * std::sin(q(0) + q(1))));
  return kinetic + potential;
}

Eigen::Vector4d robot_continuous_dynamics(const Eigen::Vector4d& x,
                                          const Eigen::Vector2d& u,
                                          const RobotParams& p) {
  if (!x.allFinite() || !u.allFinite()) {
    throw DomainError("robot_continuous_dynamics: non-finite state or input");
  }
  const Eigen::Vector2d q = x.head<2>();
  const Eigen::Vector2d qd = x.tail<2>();
  const Eigen::Vector2d friction(p.b1 * qd(0), p.b2 * qd(1));
  const Eigen::Vector2d rhs =
      u - robot_coriolis(q, qd, p) - robot_gravity(q, p) - friction;
  Eigen::Vector4d xd;
  xd << qd, robot_mass_matrix(q, p).ldlt().solve(rhs);
  return xd;
}

Vector step(const LinearSystem& system, const Vector& x, const Vector& u) {
  check_dims("step", x, system.state_dim(), u, system.input_dim());
  return system.a * x + system.b * u;
}

Vector step(const RobotParams& p, const Vector& x, const Vector& u) {
  check_dims("step", x, 4, u, 2);
  const Eigen::Vector4d x0 = x;
  const Eigen::Vector2d uu = u;
  const double h = p.dt;
  const Eigen::Vector4d k1 = robot_continuous_dynamics(x0, uu, p);
  const Eigen::Vector4d k2 = robot_continuous_dynamics(x0 + 0.5 * h * k1, uu, p);
  const Eigen::Vector4d k3 = robot_continuous_dynamics(x0 + 0.5 * h * k2, uu, p);
  const Eigen::Vector4d k4 = robot_continuous_dynamics(x0 + h * k3, uu, p);
  return x0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector step(const System& system, const Vector& x, const Vector& u) {
  return std::visit([&](const auto& s) { return step(s, x, u); }, system);
}

Matrix lowpass_random_input(Eigen::Index length, Eigen::Index m, double pole,
                            double sigma, Seed seed) {
  if (length < 1) throw ParameterError("lowpass_random_input: T must be >= 1");
  if (!(pole >= 0.0 && pole < 1.0)) {
    throw ParameterError("lowpass_random_input: pole must lie in [0, 1)");
  }
  if (!(sigma >= 0.0)) {
    throw ParameterError("lowpass_random_input: sigma must be >= 0");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix u(m, length);
  for (Eigen::Index t = 0; t < length; ++t) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double w = sigma * normal(rng);
      const double prev = t > 0 ? u(i, t - 1) : 0.0;
      u(i, t) = pole * prev + (1.0 - pole) * w;
    }
  }
  return u;
}

double unit_variance_sigma(double pole) {
  return std::sqrt((1.0 - pole * pole)) / (1.0 - pole);
}

Trajectory rollout(const System& system, const Vector& x0,
                   const Matrix& inputs, double noise_std, Seed seed) {
  const Eigen::Index n = state_dim(system);
  if (x0.size() != n || inputs.rows() != input_dim(system)) {
    throw DimensionError("rollout: x0 or inputs do not match the system");
  }
  if (!(noise_std >= 0.0)) throw ParameterError("rollout: noise must be >= 0");
  const Eigen::Index length = inputs.cols();
  Trajectory traj;
  traj.dt = sample_time(system);
  traj.inputs = inputs;
  traj.states.resize(n, length);
  Vector x = x0;
  for (Eigen::Index t = 0; t < length; ++t) {
    if (t > 0) x = step(system, x, inputs.col(t - 1));
    if (!x.allFinite() || x.norm() > kDivergenceNorm) {
      throw DivergenceError(
          "rollout: state diverged at step " + std::to_string(t), t);
    }
    traj.states.col(t) = x;
  }
  if (noise_std > 0.0) {
    Rng rng(seed);
    traj.states += noise_std * standard_normal(n, length, rng);
  }
  return traj;
}

JacobianMatrix true_jacobian(const System& system, const Vector& x,
                             const Vector& u) {
  return std::visit(
      Overloaded{
          [&](const LinearSystem& s) {
            check_dims("true_jacobian", x, s.state_dim(), u, s.input_dim());
            return JacobianMatrix(s.a, s.b);
          },
          [&](const RobotParams& p) {
            check_dims("true_jacobian", x, 4, u, 2);
            const Eigen::Index n = 4, m = 2;
            Vector z(n + m);
            z << x, u;
            Matrix jac(n, n + m);
            for (Eigen::Index j = 0; j < n + m; ++j) {
              const double h = 1e-6 * std::max(1.0, std::abs(z(j)));
              Vector zp = z, zm = z;
              zp(j) += h;
              zm(j) -= h;
              jac.col(j) = (step(p, zp.head(n), zp.tail(m)) -
                            step(p, zm.head(n), zm.tail(m))) /
                           (2.0 * h);
            }
            return JacobianMatrix(std::move(jac));
          }},
      system);
}

}  // namespace jacprop
