// Copyright 2026 The roadplan Authors
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


#ifndef ROADPLAN__DYNAMICS_HPP_
#define ROADPLAN__DYNAMICS_HPP_

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <variant>
#include <vector>

namespace roadplan
{

struct VehicleParams
{
  double wheelbase{2.7};
  double width{1.8};
  double velocity_delay{1.0};
  double v_min{0.0};
  double v_max{50.0};
  double delta_max{M_PI / 6.0};
  double a_min{-10.0};
  double a_max{10.0};
  double w_max{0.5};

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

enum class ModelVariant { Kinematic3, RateControlled5, DelayedVelocity5 };

/// Rear-axle midpoint, yaw, speed and steering angle. v and delta are unused by Kinematic3.
struct VehicleState
{
  double x{0.0};
  double y{0.0};
  double psi{0.0};
  double v{0.0};
  double delta{0.0};
};

struct KinematicInput
{
  double v{0.0};
  double delta{0.0};
};

struct RateInput
{
  double a{0.0};
  double w{0.0};
};

struct DelayedInput
{
  double v_d{0.0};
  double w{0.0};
};

using ControlInput = std::variant<KinematicInput, RateInput, DelayedInput>;

enum class Integrator { Euler, RK4 };

int state_dimension(ModelVariant variant);

Eigen::VectorXd to_vector(const VehicleState & state, ModelVariant variant);
VehicleState from_vector(const Eigen::VectorXd & z, ModelVariant variant);

Eigen::Matrix2d rotation(double psi);

/// Returns the time derivative of the state for the given model variant.
Eigen::VectorXd derivative(
  const VehicleState & state, const ControlInput & u, const VehicleParams & params,
  ModelVariant variant);

Eigen::Vector2d front_axle(const VehicleState & state, const VehicleParams & params);
Eigen::Vector2d center(const VehicleState & state, const VehicleParams & params);

struct Trajectory
{
  std::vector<double> t;
  std::vector<VehicleState> states;
};

using ControlSignal = std::function<ControlInput(double)>;

/**
 * Fixed step integration from t0 to t1. The last step is shortened so that t1 is hit exactly.
 * With piecewise_constant set, the control is sampled once at the start of every step.
 */
Trajectory integrate(
  const VehicleState & state, const ControlSignal & control, const VehicleParams & params,
  ModelVariant variant, double t0, double t1, double h, Integrator method,
  bool piecewise_constant = true);

/// Single step of the chosen scheme with a constant control.
VehicleState step(
  const VehicleState & state, const ControlInput & u, const VehicleParams & params,
  ModelVariant variant, double h, Integrator method);

double wrap_angle(double angle);

/// Right-hand side of the rate controlled model, z = (x, y, psi, v, delta), u = (a, w).
template <class S, class U>
void rate_controlled_rhs(const S * z, const U * u, double wheelbase, S * dz)
{
  using std::cos;
  using std::sin;
  using std::tan;
  dz[0] = z[3] * cos(z[2]);
  dz[1] = z[3] * sin(z[2]);
  dz[2] = z[3] * tan(z[4]) / wheelbase;
  dz[3] = S(0.0) + u[0];
  dz[4] = S(0.0) + u[1];
}

}  // namespace roadplan

#endif  // ROADPLAN__DYNAMICS_HPP_
