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


#include "roadplan/tracking.hpp"

#include "roadplan/csv.hpp"
#include "roadplan/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace roadplan::tracking
{

ReferenceTrack::ReferenceTrack(CubicSpline spline, SpeedProfile profile, double v_floor)
: spline_(std::move(spline)), profile_(std::move(profile)), v_floor_(v_floor)
{
  if (!profile_.s || !profile_.ds || !profile_.dds) {
    throw Error(ErrorCode::InvalidArgument, "speed profile needs s, ds and dds");
  }
  if (!(profile_.duration > 0.0) || !(v_floor_ > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "track duration and speed floor must be positive");
  }
}

ReferenceTrack ReferenceTrack::constant_speed(CubicSpline spline, double speed, double v_floor)
{
  if (!(speed > 0.0)) throw Error(ErrorCode::InvalidArgument, "reference speed must be positive");
  // The spline parameter is chord length; tabulate true arc length with Simpson's rule so the
  // reference moves at exactly the requested speed.
  const int n = std::max(64, static_cast<int>(spline.length() * 20.0));
  const double hp = spline.length() / n;
  auto table = std::make_shared<std::vector<double>>(n + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    const double a = i * hp;
    const double seg = hp / 6.0 *
      (spline.eval_d(a).norm() + 4.0 * spline.eval_d(a + 0.5 * hp).norm() +
       spline.eval_d(a + hp).norm());
    (*table)[i + 1] = (*table)[i] + seg;
  }
  const CubicSpline curve = spline;
  // Chord parameter at arc length sigma, by table lookup and Newton polishing.
  auto param = [table, hp, curve](double sigma) {
    const auto it = std::upper_bound(table->begin(), table->end(), sigma);
    const auto i = std::clamp<long>(std::distance(table->begin(), it) - 1, 0,
                                    static_cast<long>(table->size()) - 2);
    double u = i * hp;
    double acc = (*table)[i];
    for (int k = 0; k < 3; ++k) {
      const double du = (sigma - acc) / curve.eval_d(u).norm();
      const double next = u + du;
      const double mid = 0.5 * (u + next);
      acc += (next - u) / 6.0 *
        (curve.eval_d(u).norm() + 4.0 * curve.eval_d(mid).norm() + curve.eval_d(next).norm());
      u = next;
    }
    return u;
  };
  SpeedProfile p;
  p.s = [param, speed](double t) { return param(speed * t); };
  p.ds = [param, speed, curve](double t) {
    return speed / curve.eval_d(param(speed * t)).norm();
  };
  p.dds = [param, speed, curve](double t) {
    const double u = param(speed * t);
    const Eigen::Vector2d g1 = curve.eval_d(u);
    const double n2 = g1.squaredNorm();
    return -speed * speed * g1.dot(curve.eval_dd(u)) / (n2 * n2);
  };
  p.duration = table->back() / speed;
  return ReferenceTrack(std::move(spline), std::move(p), v_floor);
}

ReferencePoint ReferenceTrack::at(double t) const
{
  t = std::clamp(t, 0.0, profile_.duration);
  const double s = profile_.s(t);
  const double ds = profile_.ds(t);
  const double dds = profile_.dds(t);
  const Eigen::Vector2d g1 = spline_.eval_d(s);
  ReferencePoint r;
  r.pos = spline_.eval(s);
  r.vel = g1 * ds;
  r.acc = spline_.eval_dd(s) * ds * ds + g1 * dds;
  if (r.vel.norm() < v_floor_) {
    throw Error(ErrorCode::ZeroSpeedSingularity, "reference speed below the floor");
  }
  return r;
}

KinematicInput flat_controls(
  const Eigen::Vector2d & d1, const Eigen::Vector2d & d2, double wheelbase, double v_floor)
{
  const double v = d1.norm();
  if (v < v_floor) throw Error(ErrorCode::ZeroSpeedSingularity, "flat output speed below the floor");
  return {v, std::atan(wheelbase * (d2.y() * d1.x() - d2.x() * d1.y()) / (v * v * v))};
}

KinematicInput feedback_raw(
  const Eigen::Vector2d & y, const Eigen::Vector2d & dy, const ReferencePoint & ref,
  const Gains & g, double wheelbase, double v_floor)
{
  const double speed = dy.norm();
  if (speed < v_floor || ref.vel.norm() < v_floor) {
    throw Error(ErrorCode::ZeroSpeedSingularity, "measured or reference speed below the floor");
  }
  const Eigen::Vector2d e = y - ref.pos;
  const double kv = std::hypot(ref.vel.x() - g.k1 * e.x(), ref.vel.y() - g.k2 * e.y());
  const double ay = ref.acc.y() - g.k5 * (dy.y() - ref.vel.y()) - g.k6 * e.y();
  const double ax = ref.acc.x() - g.k3 * (dy.x() - ref.vel.x()) - g.k4 * e.x();
  const double kd = std::atan(wheelbase * (ay * dy.x() - ax * dy.y()) / (speed * speed * speed));
  return {kv, kd};
}

KinematicInput feedback(
  const Eigen::Vector2d & y, const Eigen::Vector2d & dy, const ReferencePoint & ref,
  const Gains & gains, double wheelbase, double v_floor, const ControlLimits & limits)
{
  const KinematicInput raw = feedback_raw(y, dy, ref, gains, wheelbase, v_floor);
  return {
    std::clamp(raw.v, limits.v_min, limits.v_max),
    std::clamp(raw.delta, -limits.delta_max, limits.delta_max)};
}

Eigen::Vector3d closed_loop_rhs(
  const Eigen::Vector3d & state, const ReferencePoint & ref, const Gains & gains,
  double wheelbase)
{
  const Eigen::Vector2d y = state.head<2>();
  const Eigen::Vector2d e = y - ref.pos;
  const double kv = std::hypot(ref.vel.x() - gains.k1 * e.x(), ref.vel.y() - gains.k2 * e.y());
  const Eigen::Vector2d heading(std::cos(state[2]), std::sin(state[2]));
  const KinematicInput u = feedback_raw(y, kv * heading, ref, gains, wheelbase, 0.0);
  return {kv * heading.x(), kv * heading.y(), kv * std::tan(u.delta) / wheelbase};
}

Eigen::Matrix3d linearized_matrix(const ReferencePoint & ref, const Gains & g)
{
  if (!g.symmetric()) {
    throw Error(ErrorCode::InvalidArgument, "linear analysis needs k1 = k2, k3 = k5, k4 = k6");
  }
  const Eigen::Vector2d & r = ref.vel;
  const Eigen::Vector2d & a = ref.acc;
  const double vd = r.norm();
  if (!(vd > 0.0)) throw Error(ErrorCode::ZeroSpeedSingularity, "reference speed is zero");
  const double v2 = vd * vd;
  // Yaw rate of the reference times v_d.
  const double turn = (a.y() * r.x() - a.x() * r.y()) / vd;
  Eigen::Matrix3d A;
  A << -g.k1 * r.x() * r.x() / v2, -g.k1 * r.x() * r.y() / v2, -r.y(),
       -g.k1 * r.x() * r.y() / v2, -g.k1 * r.y() * r.y() / v2, r.x(),
       g.k4 * r.y() / v2 + g.k1 * turn * r.x() / (v2 * vd),
       -g.k4 * r.x() / v2 + g.k1 * turn * r.y() / (v2 * vd),
       -g.k3 - a.dot(r) / v2;
  return A;
}

StabilityReport stability_check(const Gains & g)
{
  StabilityReport rep;
  rep.applicable = g.symmetric();
  if (!rep.applicable) return rep;
  const std::complex<double> disc = std::sqrt(std::complex<double>(g.k3 * g.k3 - 4.0 * g.k4));
  rep.roots = {-g.k1, 0.5 * (-g.k3 + disc), 0.5 * (-g.k3 - disc)};
  rep.stable = g.k1 > 0.0 && g.k3 > 0.0 && g.k4 > 0.0;
  return rep;
}

double ClosedLoopResult::max_error() const
{
  return error.empty() ? 0.0 : *std::max_element(error.begin(), error.end());
}

double ClosedLoopResult::max_error_after(double t0) const
{
  double m = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t0) m = std::max(m, error[i]);
  }
  return m;
}

ClosedLoopResult closed_loop(
  const ReferenceTrack & track, const VehicleState & initial, const Gains & gains,
  const ClosedLoopOptions & o)
{
  if (!(o.duration > 0.0) || !(o.rate > 0.0) || o.substeps < 1) {
    throw Error(ErrorCode::InvalidArgument, "duration, rate and substeps must be positive");
  }
  const double period = 1.0 / o.rate;
  const double end = std::min(o.duration, track.duration());
  const auto samples = static_cast<int>(std::floor(end / period + 1e-9));
  VehicleParams params;
  params.wheelbase = o.wheelbase;
  params.v_max = std::max(params.v_max, o.limits.v_max);
  params.delta_max = o.limits.delta_max;

  std::mt19937_64 rng(o.noise ? o.noise->seed : 0);
  auto draw = [&rng](double amp) {
    if (amp <= 0.0) return 0.0;
    return std::uniform_real_distribution<double>(-amp, amp)(rng);
  };

  ClosedLoopResult out;
  VehicleState x = initial;
  Eigen::Vector2d last_measured = Eigen::Vector2d::Zero();
  for (int k = 0; k <= samples; ++k) {
    const double t = k * period;
    const ReferencePoint ref = track.at(t);
    const Eigen::Vector2d pos(x.x, x.y);
    const Eigen::Vector2d vel = x.v * Eigen::Vector2d(std::cos(x.psi), std::sin(x.psi));
    Eigen::Vector2d measured = pos;
    Eigen::Vector2d dmeasured = vel;
    if (o.noise) {
      measured += Eigen::Vector2d(draw(o.noise->position), draw(o.noise->position));
      if (o.velocity == VelocitySource::Direct || k == 0) {
        dmeasured += Eigen::Vector2d(draw(o.noise->velocity), draw(o.noise->velocity));
      }
    }
    if (o.velocity == VelocitySource::Differenced && k > 0) {
      dmeasured = (measured - last_measured) / period;
    }
    last_measured = measured;

    out.t.push_back(t);
    out.reference.push_back(ref.pos);
    out.error.push_back((pos - ref.pos).norm());
    if (k == samples) {
      out.states.push_back(x);
      break;
    }
    const KinematicInput u =
      feedback(measured, dmeasured, ref, gains, o.wheelbase, track.v_floor(), o.limits);
    x.v = u.v;
    x.delta = u.delta;
    out.states.push_back(x);
    const double h = period / o.substeps;
    for (int i = 0; i < o.substeps; ++i) {
      x = step(x, u, params, ModelVariant::Kinematic3, h, Integrator::RK4);
    }
    x.v = u.v;
    x.delta = u.delta;
  }
  return out;
}

void write_tracking_csv(const std::string & path, const ClosedLoopResult & r)
{
  std::vector<std::vector<double>> rows;
  rows.reserve(r.t.size());
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    rows.push_back(
      {r.t[i], r.states[i].x, r.states[i].y, r.reference[i].x(), r.reference[i].y(), r.error[i]});
  }
  csv::write(path, {"t", "x", "y", "x_d", "y_d", "err"}, rows);
}

Waypoints demo_track()
{
  // Ellipse with semi-axes 40 m and 30 m, driven counterclockwise from its lowest point.
  Waypoints w;
  for (int k = 0; k <= 16; ++k) {
    const double th = -0.5 * std::numbers::pi + 2.0 * std::numbers::pi * k / 16.0;
    w.emplace_back(-26.0 + 40.0 * std::cos(th), 29.0 + 30.0 * std::sin(th));
  }
  return w;
}

}  // namespace roadplan::tracking
