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


#include "roadplan/csv.hpp"
#include "roadplan/error.hpp"
#include "roadplan/geometry.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using roadplan::CubicSpline;
using roadplan::Waypoints;

namespace
{

Waypoints random_points(std::mt19937_64 & rng, int n)
{
  std::uniform_real_distribution<double> step(0.5, 3.0);
  std::uniform_real_distribution<double> turn(-1.0, 1.0);
  Waypoints pts{{0.0, 0.0}};
  double heading = 0.0;
  for (int i = 1; i < n; ++i) {
    heading += turn(rng);
    const double len = step(rng);
    pts.push_back(pts.back() + len * Eigen::Vector2d(std::cos(heading), std::sin(heading)));
  }
  return pts;
}

}  // namespace

TEST(ChordLengths, Examples)
{
  EXPECT_EQ(roadplan::chord_lengths({{0, 0}, {3, 4}}), (std::vector<double>{0, 5}));
  EXPECT_EQ(roadplan::chord_lengths({{0, 0}, {1, 0}, {2, 0}}), (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(
    roadplan::chord_lengths({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}),
    (std::vector<double>{0, 1, 2, 3, 4}));
}

TEST(ChordLengths, DuplicatePoint)
{
  try {
    roadplan::chord_lengths({{0, 0}, {1, 1}, {1, 1}});
    FAIL();
  } catch (const roadplan::Error & e) {
    EXPECT_EQ(e.code(), roadplan::ErrorCode::DuplicatePoint);
  }
}

TEST(ChordLengths, RigidMotionInvariance)
{
  std::mt19937_64 rng(3);
  const Waypoints pts = random_points(rng, 15);
  const auto s0 = roadplan::chord_lengths(pts);
  const double c = std::cos(1.1), sn = std::sin(1.1);
  Waypoints moved;
  for (const auto & p : pts) {
    moved.emplace_back(c * p.x() - sn * p.y() + 17.0, sn * p.x() + c * p.y() - 4.0);
  }
  const auto s1 = roadplan::chord_lengths(moved);
  for (std::size_t i = 0; i < s0.size(); ++i) EXPECT_NEAR(s0[i], s1[i], 1e-12);
}

TEST(Spline, CollinearHasNoCurvature)
{
  const auto sp = CubicSpline::interpolate({{0, 0}, {1, 1}, {3, 3}, {4, 4}});
  for (int k = 0; k <= 100; ++k) {
    const double s = sp.length() * k / 100.0;
    EXPECT_LT(sp.eval_dd(s).norm(), 1e-10);
    EXPECT_NEAR(sp.eval_d(s).x(), std::sqrt(0.5), 1e-12);
  }
}

TEST(Spline, TwoPointsIsSegment)
{
  const auto sp = CubicSpline::interpolate({{0, 0}, {2, 0}});
  EXPECT_NEAR(sp.eval(1.0).x(), 1.0, 1e-15);
  EXPECT_EQ(sp.eval_dd(0.5).norm(), 0.0);
}

TEST(Spline, InterpolatesExactly)
{
  const auto sp = CubicSpline::interpolate({{0, 0}, {1, 1}, {2, 0}});
  EXPECT_EQ(sp.eval(sp.breakpoints()[1]), Eigen::Vector2d(1, 1));
  EXPECT_EQ(sp.eval(0.0), Eigen::Vector2d(0, 0));
  EXPECT_EQ(sp.eval(sp.length()), Eigen::Vector2d(2, 0));
}

TEST(Spline, RandomPointsResiduals)
{
  std::mt19937_64 rng(10);
  const Waypoints pts = random_points(rng, 10);
  const auto sp = CubicSpline::interpolate(pts);
  const auto & s = sp.breakpoints();
  const auto & m = sp.moments();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_LT((sp.eval(s[i]) - pts[i]).norm(), 1e-12);
  }
  // Substitute the moments back into the continuity equations.
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double h0 = s[i] - s[i - 1];
    const double h1 = s[i + 1] - s[i];
    const Eigen::Vector2d lhs = h0 * m[i - 1] + 2.0 * (h0 + h1) * m[i] + h1 * m[i + 1];
    const Eigen::Vector2d rhs =
      6.0 * ((pts[i + 1] - pts[i]) / h1 - (pts[i] - pts[i - 1]) / h0);
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * (1.0 + rhs.norm()));
  }
  EXPECT_EQ(m.front().norm(), 0.0);
  EXPECT_EQ(m.back().norm(), 0.0);
}

TEST(Spline, SecondDerivativeContinuity)
{
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sp = CubicSpline::interpolate(random_points(rng, 12));
    const auto & s = sp.breakpoints();
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      const double eps = 1e-12 * s.back();
      const Eigen::Vector2d left = sp.eval_dd(s[i] - eps);
      const Eigen::Vector2d right = sp.eval_dd(s[i] + eps);
      EXPECT_LT((left - right).norm(), 1e-9 * (1.0 + left.norm()));
      const Eigen::Vector2d dl = sp.eval_d(s[i] - eps);
      const Eigen::Vector2d dr = sp.eval_d(s[i] + eps);
      EXPECT_LT((dl - dr).norm(), 1e-9);
    }
  }
}

TEST(Spline, DerivativesMatchFiniteDifferences)
{
  std::mt19937_64 rng(5);
  const auto sp = CubicSpline::interpolate(random_points(rng, 10));
  std::uniform_real_distribution<double> pick(0.01, sp.length() - 0.01);
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const double s = pick(rng);
    const Eigen::Vector2d fd = (sp.eval(s + h) - sp.eval(s - h)) / (2 * h);
    const Eigen::Vector2d d = sp.eval_d(s);
    EXPECT_LT((fd - d).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + d.norm()));
    const Eigen::Vector2d fdd = (sp.eval_d(s + h) - sp.eval_d(s - h)) / (2 * h);
    EXPECT_LT((fdd - sp.eval_dd(s)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Spline, ClampsOutOfRange)
{
  const auto sp = CubicSpline::interpolate({{0, 0}, {1, 1}, {2, 0}});
  bool clamped = false;
  EXPECT_EQ(sp.eval(-1.0, &clamped), Eigen::Vector2d(0, 0));
  EXPECT_TRUE(clamped);
  EXPECT_EQ(sp.eval(100.0, &clamped), Eigen::Vector2d(2, 0));
  EXPECT_TRUE(clamped);
  sp.eval(0.5, &clamped);
  EXPECT_FALSE(clamped);
}

TEST(Spline, ProjectFindsParameter)
{
  std::mt19937_64 rng(8);
  const auto sp = CubicSpline::interpolate(random_points(rng, 8));
  for (double s : {0.3, 2.0, 5.5}) {
    EXPECT_NEAR(sp.project(sp.eval(s)), s, 1e-8);
  }
}

TEST(Thin, CollinearCollapse)
{
  Waypoints pts;
  for (int i = 0; i < 10; ++i) pts.emplace_back(i, 2.0 * i);
  const auto out = roadplan::thin(pts, 0.01);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.front(), pts.front());
  EXPECT_EQ(out.back(), pts.back());
}

TEST(Thin, ZeroToleranceKeepsInput)
{
  Waypoints pts;
  for (int i = 0; i < 10; ++i) pts.emplace_back(i, 0.0);
  EXPECT_EQ(roadplan::thin(pts, 0.0), pts);
  const auto a = CubicSpline::interpolate(roadplan::thin(pts, 0.0));
  const auto b = CubicSpline::interpolate(pts);
  EXPECT_EQ(a.breakpoints(), b.breakpoints());
  EXPECT_EQ(a.moments(), b.moments());
}

TEST(Thin, RemovedPointsWithinTolerance)
{
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Waypoints pts = random_points(rng, 40);
    for (double eps : {0.1, 0.5, 2.0}) {
      const auto out = roadplan::thin(pts, eps);
      EXPECT_EQ(out.front(), pts.front());
      EXPECT_EQ(out.back(), pts.back());
      EXPECT_LE(roadplan::polyline_length(out), roadplan::polyline_length(pts) + 1e-12);
      for (const auto & p : pts) {
        EXPECT_LE(roadplan::point_polyline_distance(p, out), eps + 1e-12);
      }
    }
  }
}

TEST(Csv, WaypointRoundTrip)
{
  const auto dir = std::filesystem::temp_directory_path() / "roadplan_geometry_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "pts.csv").string();
  const Waypoints pts{{0.0, 0.0}, {1.25, -3.5}, {2.0, 1.0 / 3.0}};
  roadplan::write_waypoints_csv(pts, path);
  const auto back = roadplan::read_waypoints_csv(path);
  ASSERT_EQ(back.size(), pts.size());
  EXPECT_NEAR(back[2].y(), 1.0 / 3.0, 1e-9);

  std::ofstream(dir / "nohdr.csv") << "1,2\n3,4\n";
  EXPECT_EQ(roadplan::read_waypoints_csv((dir / "nohdr.csv").string()).size(), 2u);

  const auto sp = CubicSpline::interpolate(pts);
  roadplan::write_spline_csv(sp, 11, (dir / "spline.csv").string());
  const auto rows = roadplan::csv::read((dir / "spline.csv").string());
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0].size(), 5u);
}

TEST(Csv, NineSignificantDigits)
{
  EXPECT_EQ(roadplan::csv::format(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(roadplan::csv::format(15.3551234567), "15.3551235");
  EXPECT_EQ(roadplan::csv::format(-0.0), "0");
}
