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


#include "roadplan/error.hpp"
#include "roadplan/tracking.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace roadplan;
using namespace roadplan::tracking;

namespace
{

const double kPi = std::numbers::pi;

ReferenceTrack demo(double speed = 11.5)
{
  return ReferenceTrack::constant_speed(CubicSpline::interpolate(demo_track()), speed);
}

VehicleState on_track(const ReferenceTrack & track)
{
  const ReferencePoint r = track.at(0.0);
  VehicleState s;
  s.x = r.pos.x();
  s.y = r.pos.y();
  s.psi = std::atan2(r.vel.y(), r.vel.x());
  s.v = r.vel.norm();
  return s;
}

ReferenceTrack straight(double speed)
{
  return ReferenceTrack::constant_speed(
    CubicSpline::interpolate({{0.0, 0.0}, {200.0, 0.0}, {400.0, 0.0}}), speed);
}

// Reference point moving at constant speed along a curve of curvature kappa.
ReferencePoint random_reference(std::mt19937 & rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ReferencePoint r;
  const double speed = 1.0 + 19.0 * (0.5 + 0.5 * u(rng));
  const double heading = kPi * u(rng);
  const double kappa = 0.2 * u(rng);
  r.pos = Eigen::Vector2d(10.0 * u(rng), 10.0 * u(rng));
  r.vel = speed * Eigen::Vector2d(std::cos(heading), std::sin(heading));
  r.acc = kappa * speed * speed * Eigen::Vector2d(-std::sin(heading), std::cos(heading));
  return r;
}

Gains random_symmetric_gains(std::mt19937 & rng)
{
  std::uniform_real_distribution<double> u(0.2, 4.0);
  Gains g;
  g.k1 = g.k2 = u(rng);
  g.k3 = g.k5 = u(rng);
  g.k4 = g.k6 = u(rng);
  return g;
}

}  // namespace

TEST(FlatControls, StraightLineAndCircle)
{
  const KinematicInput s = flat_controls({3.0, 4.0}, {0.0, 0.0}, 2.8);
  EXPECT_DOUBLE_EQ(s.v, 5.0);
  EXPECT_DOUBLE_EQ(s.delta, 0.0);
  // Unit speed on a circle of radius R: y' = (-sin t, cos t) / ..., curvature 1 / R.
  const double R = 2.8;
  const double t = 0.3;
  const Eigen::Vector2d d1(-std::sin(t / R), std::cos(t / R));
  const Eigen::Vector2d d2 = Eigen::Vector2d(-std::cos(t / R), -std::sin(t / R)) / R;
  const KinematicInput c = flat_controls(d1, d2, 2.8);
  EXPECT_NEAR(c.v, 1.0, 1e-14);
  EXPECT_NEAR(c.delta, kPi / 4.0, 1e-12);
}

TEST(FlatControls, RoundTripThroughModel)
{
  std::mt19937 rng(3);
  VehicleParams params;
  params.wheelbase = 2.8;
  for (int i = 0; i < 50; ++i) {
    const ReferencePoint r = random_reference(rng);
    const KinematicInput u = flat_controls(r.vel, r.acc, params.wheelbase);
    VehicleState s;
    s.x = r.pos.x();
    s.y = r.pos.y();
    s.psi = std::atan2(r.vel.y(), r.vel.x());
    const Eigen::VectorXd dz = derivative(s, u, params, ModelVariant::Kinematic3);
    EXPECT_LT((dz.head<2>() - r.vel).norm(), 1e-10);
    // Yaw rate equals the turning rate of the velocity vector.
    const double turn = (r.vel.x() * r.acc.y() - r.vel.y() * r.acc.x()) / r.vel.squaredNorm();
    EXPECT_NEAR(dz[2], turn, 1e-10);
  }
}

TEST(FlatControls, ZeroSpeedThrows)
{
  try {
    flat_controls({0.05, 0.0}, {0.0, 0.0}, 2.8);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroSpeedSingularity);
  }
  ReferencePoint ref;
  ref.vel = {5.0, 0.0};
  EXPECT_THROW(feedback({0.0, 0.0}, {0.0, 0.01}, ref, Gains{}, 2.8), Error);
}

TEST(Feedback, ReducesToReferenceOnTrack)
{
  std::mt19937 rng(5);
  for (int i = 0; i < 20; ++i) {
    const ReferencePoint r = random_reference(rng);
    const KinematicInput u = feedback_raw(r.pos, r.vel, r, Gains{}, 2.8);
    const KinematicInput f = flat_controls(r.vel, r.acc, 2.8);
    EXPECT_NEAR(u.v, r.vel.norm(), 1e-12);
    EXPECT_NEAR(u.delta, f.delta, 1e-12);
  }
}

TEST(Feedback, SpeedCorrectionExample)
{
  ReferencePoint ref;
  ref.vel = {5.0, 0.0};
  Gains g;
  g.k1 = 1.0;
  const KinematicInput u = feedback_raw({1.0, 0.0}, {5.0, 0.0}, ref, g, 2.8);
  EXPECT_DOUBLE_EQ(u.v, 4.0);
}

TEST(Feedback, SteersTowardStraightReference)
{
  for (double offset : {1.0, -1.0, 2.0}) {
    const ReferenceTrack track = straight(10.0);
    VehicleState s = on_track(track);
    s.y = offset;
    ClosedLoopOptions o;
    o.duration = 1.0;
    const ClosedLoopResult r = closed_loop(track, s, Gains{}, o);
    EXPECT_LT(std::abs(r.states.back().y), std::abs(offset));
    EXPECT_LT(offset * r.states.front().delta, 0.0);
  }
}

TEST(Feedback, ProjectionKeepsLimits)
{
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 500; ++i) {
    ReferencePoint r = random_reference(rng);
    const Eigen::Vector2d y = r.pos + Eigen::Vector2d(u(rng), u(rng));
    const Eigen::Vector2d dy(u(rng), u(rng));
    if (dy.norm() < 0.1) continue;
    const KinematicInput c = feedback(y, dy, r, Gains{}, 2.8);
    EXPECT_GE(c.v, 0.0);
    EXPECT_LE(c.v, 50.0);
    EXPECT_LE(std::abs(c.delta), kPi / 6.0);
  }
}

TEST(Linearization, StraightReferenceEntries)
{
  ReferencePoint r;
  r.vel = {11.5, 0.0};
  Gains g;
  g.k1 = g.k2 = 1.5;
  const Eigen::Matrix3d A = linearized_matrix(r, g);
  EXPECT_DOUBLE_EQ(A(0, 0), -1.5);
  EXPECT_DOUBLE_EQ(A(1, 2), 11.5);
  EXPECT_DOUBLE_EQ(A(2, 1), -g.k4 / 11.5);
  EXPECT_DOUBLE_EQ(A(2, 2), -g.k3);
  g.k2 = 1.0;
  EXPECT_THROW(linearized_matrix(r, g), Error);
}

TEST(Linearization, MatchesFiniteDifferenceJacobian)
{
  std::mt19937 rng(11);
  for (int i = 0; i < 50; ++i) {
    ReferencePoint r = random_reference(rng);
    // Tangential acceleration too, which the constant speed points lack.
    r.acc += 0.3 * r.vel;
    const Gains g = random_symmetric_gains(rng);
    const Eigen::Matrix3d A = linearized_matrix(r, g);
    const Eigen::Vector3d x0(r.pos.x(), r.pos.y(), std::atan2(r.vel.y(), r.vel.x()));
    Eigen::Matrix3d J;
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[j] = h;
      J.col(j) = (closed_loop_rhs(x0 + e, r, g, 2.8) - closed_loop_rhs(x0 - e, r, g, 2.8)) / (2 * h);
    }
    EXPECT_LT((J - A).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, A.cwiseAbs().maxCoeff())) << i;
  }
}

TEST(Linearization, CharacteristicPolynomialFactors)
{
  std::mt19937 rng(13);
  for (int i = 0; i < 100; ++i) {
    const ReferencePoint r = random_reference(rng);
    const Gains g = random_symmetric_gains(rng);
    const Eigen::Matrix3d A = linearized_matrix(r, g);
    // det(l I - A) = l^3 + c2 l^2 + c1 l + c0.
    const double c2 = -A.trace();
    const double c1 = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0) + A(0, 0) * A(2, 2) -
                      A(0, 2) * A(2, 0) + A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
    const double c0 = -A.determinant();
    EXPECT_NEAR(c2, g.k1 + g.k3, 1e-9);
    EXPECT_NEAR(c1, g.k1 * g.k3 + g.k4, 1e-9);
    EXPECT_NEAR(c0, g.k1 * g.k4, 1e-9);
  }
}

TEST(Stability, PaperGains)
{
  const StabilityReport rep = stability_check(Gains{});
  ASSERT_TRUE(rep.applicable);
  EXPECT_TRUE(rep.stable);
  ASSERT_EQ(rep.roots.size(), 3u);
  EXPECT_NEAR(std::abs(rep.roots[0] - std::complex<double>(-1.0, 0.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(rep.roots[1] - std::complex<double>(-1.0, 1.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(rep.roots[2] - std::complex<double>(-1.0, -1.0)), 0.0, 1e-12);
}

TEST(Stability, SignConditions)
{
  Gains g;
  g.k1 = g.k2 = 0.0;
  EXPECT_FALSE(stability_check(g).stable);
  g = Gains{};
  g.k4 = g.k6 = -1.0;
  EXPECT_FALSE(stability_check(g).stable);
  g = Gains{};
  g.k5 = 3.0;
  EXPECT_FALSE(stability_check(g).applicable);
}

TEST(Stability, AgreesWithNumericEigenvalues)
{
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const ReferencePoint r = random_reference(rng);
    Gains g;
    g.k1 = g.k2 = u(rng);
    g.k3 = g.k5 = u(rng);
    g.k4 = g.k6 = u(rng);
    const StabilityReport rep = stability_check(g);
    Eigen::EigenSolver<Eigen::Matrix3d> es(linearized_matrix(r, g));
    const double top = es.eigenvalues().real().maxCoeff();
    if (std::abs(top) < 1e-6) continue;
    EXPECT_EQ(rep.stable, top < 0.0) << i;
  }
}

TEST(Track, ConstantSpeedIsExact)
{
  const ReferenceTrack track = demo();
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> u(0.0, track.duration());
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    const ReferencePoint r = track.at(t);
    EXPECT_NEAR(r.vel.norm(), 11.5, 1e-6);
    const double h = 1e-4;
    const Eigen::Vector2d fd = (track.at(t + h).vel - track.at(t - h).vel) / (2 * h);
    EXPECT_LT((fd - r.acc).norm(), 1e-4 * std::max(1.0, r.acc.norm()));
  }
  EXPECT_NEAR(track.at(0.0).pos.x(), -26.0, 1e-12);
  EXPECT_NEAR(track.at(0.0).pos.y(), -1.0, 1e-12);
}

TEST(Track, OpenLoopReplayIsSecondOrder)
{
  const ReferenceTrack track = demo();
  VehicleParams params;
  params.wheelbase = 2.8;
  auto replay = [&](double h) {
    VehicleState s = on_track(track);
    double worst = 0.0;
    const int steps = static_cast<int>(std::round(8.0 / h));
    for (int k = 0; k < steps; ++k) {
      const ReferencePoint mid = track.at((k + 0.5) * h);
      const KinematicInput u = flat_controls(mid.vel, mid.acc, 2.8);
      s = step(s, u, params, ModelVariant::Kinematic3, h, Integrator::RK4);
      worst = std::max(worst, (Eigen::Vector2d(s.x, s.y) - track.at((k + 1) * h).pos).norm());
    }
    return worst;
  };
  const double e1 = replay(0.1);
  const double e2 = replay(0.05);
  EXPECT_GE(std::log2(e1 / e2), 1.8) << e1 << " " << e2;
}

TEST(ClosedLoop, OnTrackStartStaysClose)
{
  const ReferenceTrack track = demo();
  ClosedLoopOptions o;
  o.duration = track.duration();
  const ClosedLoopResult r = closed_loop(track, on_track(track), Gains{}, o);
  EXPECT_LT(r.max_error(), 0.05);
  EXPECT_NEAR(r.t.back(), std::floor(track.duration() * 20.0) / 20.0, 1e-9);
}

TEST(ClosedLoop, OffsetStartConverges)
{
  const ReferenceTrack track = demo();
  VehicleState s = on_track(track);
  s.x = -16.0;
  s.y = 9.0;
  ClosedLoopOptions o;
  o.duration = track.duration();
  const ClosedLoopResult r = closed_loop(track, s, Gains{}, o);
  EXPECT_NEAR(r.error.front(), std::sqrt(200.0), 1e-9);
  EXPECT_LT(r.max_error_after(10.0), 1.0);
}

TEST(ClosedLoop, NoisyMeasurementsStayBounded)
{
  const ReferenceTrack track = demo();
  ClosedLoopOptions o;
  o.duration = track.duration();
  o.noise = NoiseSpec{10.0, 2.0, 42};
  const ClosedLoopResult r = closed_loop(track, on_track(track), Gains{}, o);
  EXPECT_LT(r.max_error(), 50.0);
  for (const auto & s : r.states) {
    EXPECT_GE(s.v, 0.0);
    EXPECT_LE(s.v, 50.0);
    EXPECT_LE(std::abs(s.delta), kPi / 6.0 + 1e-15);
  }
  // Same seed, same run; another seed, another run.
  const ClosedLoopResult again = closed_loop(track, on_track(track), Gains{}, o);
  EXPECT_EQ(again.error, r.error);
  o.noise->seed = 43;
  EXPECT_NE(closed_loop(track, on_track(track), Gains{}, o).error, r.error);
}

TEST(ClosedLoop, DifferencedVelocityEstimates)
{
  const ReferenceTrack track = demo();
  ClosedLoopOptions o;
  o.duration = track.duration();
  o.velocity = VelocitySource::Differenced;
  o.noise = NoiseSpec{1e-3, 0.0, 1};
  const ClosedLoopResult r = closed_loop(track, on_track(track), Gains{}, o);
  EXPECT_LT(r.max_error(), 0.5);
}

TEST(ClosedLoop, LateralOffsetShrinks)
{
  const ReferenceTrack track = straight(10.0);
  for (double offset : {0.5, 1.0, 2.0}) {
    VehicleState s = on_track(track);
    s.y = offset;
    ClosedLoopOptions o;
    o.duration = 12.0;
    const ClosedLoopResult r = closed_loop(track, s, Gains{}, o);
    // The lateral poles are complex, so compare peaks over consecutive 2 s windows.
    auto peak = [&r](double a, double b) {
      double m = 0.0;
      for (std::size_t i = 0; i < r.t.size(); ++i) {
        if (r.t[i] >= a && r.t[i] < b) m = std::max(m, r.error[i]);
      }
      return m;
    };
    EXPECT_NEAR(r.error.front(), offset, 1e-12);
    for (double t = 1.0; t + 4.0 <= 12.0; t += 1.0) {
      EXPECT_LT(peak(t + 2.0, t + 4.0), peak(t, t + 2.0)) << offset << " t=" << t;
    }
  }
}

TEST(Output, TrackingCsvColumns)
{
  const ReferenceTrack track = demo();
  ClosedLoopOptions o;
  o.duration = 1.0;
  const ClosedLoopResult r = closed_loop(track, on_track(track), Gains{}, o);
  const auto path = std::filesystem::temp_directory_path() / "roadplan_test_tracking.csv";
  write_tracking_csv(path.string(), r);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,x,y,x_d,y_d,err");
  std::filesystem::remove(path);
}
