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


#ifndef ROADPLAN__TRACKING_HPP_
#define ROADPLAN__TRACKING_HPP_

#include "roadplan/dynamics.hpp"
#include "roadplan/geometry.hpp"

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace roadplan::tracking
{

struct Gains
{
  double k1{1.0};
  double k2{1.0};
  double k3{2.0};
  double k4{2.0};
  double k5{2.0};
  double k6{2.0};

  /// k1 = k2, k3 = k5 and k4 = k6, the case the linear analysis covers.
  bool symmetric() const { return k1 == k2 && k3 == k5 && k4 == k6; }
};

/// Desired position and its first two time derivatives.
struct ReferencePoint
{
  Eigen::Vector2d pos{Eigen::Vector2d::Zero()};
  Eigen::Vector2d vel{Eigen::Vector2d::Zero()};
  Eigen::Vector2d acc{Eigen::Vector2d::Zero()};
};

/// Arc position along the spline as a function of time, with two derivatives.
struct SpeedProfile
{
  std::function<double(double)> s;
  std::function<double(double)> ds;
  std::function<double(double)> dds;
  double duration{0.0};
};

/// Time-parametrized track gamma(s(t)).
class ReferenceTrack
{
public:
  ReferenceTrack(CubicSpline spline, SpeedProfile profile, double v_floor = 0.1);

  /// Constant speed, t = s / speed, over the whole spline.
  static ReferenceTrack constant_speed(CubicSpline spline, double speed, double v_floor = 0.1);

  /// Throws ZeroSpeedSingularity when the reference speed drops below the floor.
  ReferencePoint at(double t) const;
  double duration() const { return profile_.duration; }
  double v_floor() const { return v_floor_; }
  const CubicSpline & spline() const { return spline_; }

private:
  CubicSpline spline_;
  SpeedProfile profile_;
  double v_floor_;
};

enum class VelocitySource {
  /// Noisy samples of the true velocity.
  Direct,
  /// Backward differences of the measured positions.
  Differenced,
};

/// Uniform measurement noise on [-position, position) and [-velocity, velocity).
struct NoiseSpec
{
  double position{0.0};
  double velocity{0.0};
  std::uint64_t seed{0};
};

struct ControlLimits
{
  double v_min{0.0};
  double v_max{50.0};
  double delta_max{0.5235987755982988};
};

/// Inverse kinematics of the flat output. Throws ZeroSpeedSingularity below v_floor.
KinematicInput flat_controls(
  const Eigen::Vector2d & d1, const Eigen::Vector2d & d2, double wheelbase, double v_floor = 0.1);

/// Unprojected feedback law (K_v, K_delta) for measured position y and velocity dy.
KinematicInput feedback_raw(
  const Eigen::Vector2d & y, const Eigen::Vector2d & dy, const ReferencePoint & ref,
  const Gains & gains, double wheelbase, double v_floor = 0.1);

/// Feedback law projected onto the control limits.
KinematicInput feedback(
  const Eigen::Vector2d & y, const Eigen::Vector2d & dy, const ReferencePoint & ref,
  const Gains & gains, double wheelbase, double v_floor = 0.1, const ControlLimits & limits = {});

/// Closed-loop vector field in (x, y, psi) with exact measurements and no projection.
Eigen::Vector3d closed_loop_rhs(
  const Eigen::Vector3d & state, const ReferencePoint & ref, const Gains & gains,
  double wheelbase);

/**
 * Jacobian of closed_loop_rhs on the reference (psi along the reference velocity).
 * Needs symmetric gains; throws InvalidArgument otherwise.
 */
Eigen::Matrix3d linearized_matrix(const ReferencePoint & ref, const Gains & gains);

struct StabilityReport
{
  bool applicable{false};
  bool stable{false};
  /// Roots of (l^2 + k3 l + k4)(l + k1).
  std::vector<std::complex<double>> roots;
};

StabilityReport stability_check(const Gains & gains);

struct ClosedLoopOptions
{
  double rate{20.0};
  double duration{0.0};
  double wheelbase{2.8};
  /// Integration substeps per sample period.
  int substeps{10};
  std::optional<NoiseSpec> noise;
  VelocitySource velocity{VelocitySource::Direct};
  ControlLimits limits;
};

struct ClosedLoopResult
{
  std::vector<double> t;
  /// State at each sample; v and delta hold the control applied from that sample on.
  std::vector<VehicleState> states;
  std::vector<Eigen::Vector2d> reference;
  std::vector<double> error;

  double max_error() const;
  /// Largest error at or after time t.
  double max_error_after(double t) const;
};

/**
 * Samples measurements at the given rate, holds the projected feedback for one period and
 * integrates the kinematic model in between. The duration is clipped to the track.
 */
ClosedLoopResult closed_loop(
  const ReferenceTrack & track, const VehicleState & initial, const Gains & gains,
  const ClosedLoopOptions & options);

/// CSV with columns t,x,y,x_d,y_d,err.
void write_tracking_csv(const std::string & path, const ClosedLoopResult & result);

/// Elliptic circuit used by the tracking experiments, starting at (-26, -1) heading east.
Waypoints demo_track();

}  // namespace roadplan::tracking

#endif  // ROADPLAN__TRACKING_HPP_
