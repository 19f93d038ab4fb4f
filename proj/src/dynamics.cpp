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


#include "roadplan/dynamics.hpp"

#include "roadplan/error.hpp"

#include <string>

namespace roadplan
{
namespace
{
constexpr double kSteeringGuard = 1e-6;

void check_steering(double delta)
{
  if (!(std::abs(delta) < M_PI / 2.0 - kSteeringGuard)) {
    throw Error(
      ErrorCode::SteeringSingularity, "steering angle " + std::to_string(delta) + " too large");
  }
}

bool matches(const ControlInput & u, ModelVariant variant)
{
  switch (variant) {
    case ModelVariant::Kinematic3:
      return std::holds_alternative<KinematicInput>(u);
    case ModelVariant::RateControlled5:
      return std::holds_alternative<RateInput>(u);
    case ModelVariant::DelayedVelocity5:
      return std::holds_alternative<DelayedInput>(u);
  }
  return false;
}

Eigen::VectorXd rhs(
  const Eigen::VectorXd & z, const ControlInput & u, const VehicleParams & params,
  ModelVariant variant)
{
  if (!matches(u, variant)) {
    throw Error(ErrorCode::MismatchedVariant, "control input does not match model variant");
  }
  Eigen::VectorXd dz(state_dimension(variant));
  double v = 0.0;
  double delta = 0.0;
  if (variant == ModelVariant::Kinematic3) {
    const auto & k = std::get<KinematicInput>(u);
    v = k.v;
    delta = k.delta;
  } else {
    v = z[3];
    delta = z[4];
  }
  check_steering(delta);
  dz[0] = v * std::cos(z[2]);
  dz[1] = v * std::sin(z[2]);
  dz[2] = v * std::tan(delta) / params.wheelbase;
  if (variant == ModelVariant::RateControlled5) {
    const auto & r = std::get<RateInput>(u);
    dz[3] = r.a;
    dz[4] = r.w;
  } else if (variant == ModelVariant::DelayedVelocity5) {
    const auto & d = std::get<DelayedInput>(u);
    dz[3] = (d.v_d - z[3]) / params.velocity_delay;
    dz[4] = d.w;
  }
  return dz;
}

Eigen::VectorXd step_vector(
  const Eigen::VectorXd & z, const ControlSignal & control, double t, const VehicleParams & params,
  ModelVariant variant, double h, Integrator method, bool piecewise_constant)
{
  const ControlInput u0 = control(t);
  if (method == Integrator::Euler) {
    return z + h * rhs(z, u0, params, variant);
  }
  const ControlInput u_mid = piecewise_constant ? u0 : control(t + 0.5 * h);
  const ControlInput u_end = piecewise_constant ? u0 : control(t + h);
  const Eigen::VectorXd k1 = rhs(z, u0, params, variant);
  const Eigen::VectorXd k2 = rhs(z + 0.5 * h * k1, u_mid, params, variant);
  const Eigen::VectorXd k3 = rhs(z + 0.5 * h * k2, u_mid, params, variant);
  const Eigen::VectorXd k4 = rhs(z + h * k3, u_end, params, variant);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

void VehicleParams::validate() const
{
  auto fail = [](const std::string & what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(wheelbase > 0.0)) fail("wheelbase must be positive");
  if (!(width > 0.0)) fail("width must be positive");
  if (!(velocity_delay > 0.0)) fail("velocity_delay must be positive");
  if (!(v_min <= v_max)) fail("v_min must not exceed v_max");
  if (!(a_min <= a_max)) fail("a_min must not exceed a_max");
  if (!(delta_max > 0.0 && delta_max < M_PI / 2.0)) fail("delta_max must lie in (0, pi/2)");
  if (!(w_max > 0.0)) fail("w_max must be positive");
}

int state_dimension(ModelVariant variant)
{
  return variant == ModelVariant::Kinematic3 ? 3 : 5;
}

Eigen::VectorXd to_vector(const VehicleState & state, ModelVariant variant)
{
  Eigen::VectorXd z(state_dimension(variant));
  z[0] = state.x;
  z[1] = state.y;
  z[2] = state.psi;
  if (variant != ModelVariant::Kinematic3) {
    z[3] = state.v;
    z[4] = state.delta;
  }
  return z;
}

VehicleState from_vector(const Eigen::VectorXd & z, ModelVariant variant)
{
  if (z.size() != state_dimension(variant)) {
    throw Error(ErrorCode::DimensionMismatch, "state vector has wrong size");
  }
  VehicleState s;
  s.x = z[0];
  s.y = z[1];
  s.psi = z[2];
  if (variant != ModelVariant::Kinematic3) {
    s.v = z[3];
    s.delta = z[4];
  }
  return s;
}

Eigen::Matrix2d rotation(double psi)
{
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Eigen::VectorXd derivative(
  const VehicleState & state, const ControlInput & u, const VehicleParams & params,
  ModelVariant variant)
{
  return rhs(to_vector(state, variant), u, params, variant);
}

Eigen::Vector2d front_axle(const VehicleState & state, const VehicleParams & params)
{
  return Eigen::Vector2d(state.x, state.y) +
         rotation(state.psi) * Eigen::Vector2d(params.wheelbase, 0.0);
}

Eigen::Vector2d center(const VehicleState & state, const VehicleParams & params)
{
  return Eigen::Vector2d(state.x, state.y) +
         rotation(state.psi) * Eigen::Vector2d(0.5 * params.wheelbase, 0.0);
}

Trajectory integrate(
  const VehicleState & state, const ControlSignal & control, const VehicleParams & params,
  ModelVariant variant, double t0, double t1, double h, Integrator method,
  bool piecewise_constant)
{
  if (!(h > 0.0) || !(t1 > t0)) {
    throw Error(ErrorCode::InvalidArgument, "integration needs h > 0 and t1 > t0");
  }
  Trajectory traj;
  Eigen::VectorXd z = to_vector(state, variant);
  traj.t.push_back(t0);
  traj.states.push_back(state);
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / h - 1e-9));
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    const double t_next = (k + 1 == steps) ? t1 : t0 + static_cast<double>(k + 1) * h;
    z = step_vector(z, control, t, params, variant, t_next - t, method, piecewise_constant);
    VehicleState s = from_vector(z, variant);
    if (variant == ModelVariant::Kinematic3) {
      s.v = state.v;
      s.delta = state.delta;
    }
    traj.t.push_back(t_next);
    traj.states.push_back(s);
  }
  return traj;
}

VehicleState step(
  const VehicleState & state, const ControlInput & u, const VehicleParams & params,
  ModelVariant variant, double h, Integrator method)
{
  const ControlSignal signal = [&u](double) { return u; };
  VehicleState s = from_vector(
    step_vector(to_vector(state, variant), signal, 0.0, params, variant, h, method, true), variant);
  if (variant == ModelVariant::Kinematic3) {
    s.v = state.v;
    s.delta = state.delta;
  }
  return s;
}

double wrap_angle(double angle)
{
  return std::remainder(angle, 2.0 * M_PI);
}

}  // namespace roadplan
