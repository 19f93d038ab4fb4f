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


#include "roadplan/collision.hpp"
#include "roadplan/error.hpp"

#include <Eigen/LU>
#include <gtest/gtest.h>

#include <random>

using roadplan::ConvexPolyhedron;
using roadplan::Ellipse;
using roadplan::LpSolver;
using roadplan::VehicleParams;
using roadplan::VehicleRect;
using roadplan::VehicleState;

namespace
{

// Stacked system H y <= g is non-empty iff some pairwise line intersection satisfies it.
bool primal_intersects(const VehicleRect & rect, const ConvexPolyhedron & part, double tol)
{
  const auto q = part.C.rows();
  Eigen::MatrixXd H(4 + q, 2);
  Eigen::VectorXd g(4 + q);
  H << rect.A, part.C;
  g << rect.b, part.d;
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < H.rows(); ++j) {
      Eigen::Matrix2d M;
      M << H.row(i), H.row(j);
      if (std::abs(M.determinant()) < 1e-14) continue;
      const Eigen::Vector2d y = M.inverse() * Eigen::Vector2d(g[i], g[j]);
      if (((H * y - g).array() <= tol).all()) return true;
    }
  }
  return false;
}

ConvexPolyhedron random_polygon(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> count(3, 7);
  const Eigen::Vector2d c(3.0 * u(rng), 3.0 * u(rng));
  const double r = 1.15 + 0.85 * u(rng);
  roadplan::Waypoints pts;
  const int n = count(rng);
  for (int k = 0; k < n; ++k) {
    const double a = M_PI * u(rng);
    pts.push_back(c + r * (0.6 + 0.4 * u(rng)) * Eigen::Vector2d(std::cos(a), std::sin(a)));
  }
  return ConvexPolyhedron::from_vertices(pts);
}

VehicleRect random_rect(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return roadplan::vehicle_halfspaces(
    Eigen::Vector2d(3.0 * u(rng), 3.0 * u(rng)), M_PI * u(rng), 3.0 + 2.0 * u(rng),
    1.5 + u(rng));
}

ConvexPolyhedron unit_square(double cx, double cy)
{
  return ConvexPolyhedron::from_vertices(
    {{cx - 0.5, cy - 0.5}, {cx + 0.5, cy - 0.5}, {cx + 0.5, cy + 0.5}, {cx - 0.5, cy + 0.5}});
}

}  // namespace

TEST(Circle, Examples)
{
  EXPECT_EQ(roadplan::circle_clear({0, 0}, 1, {0, 0}, 1), -4.0);
  EXPECT_EQ(roadplan::circle_clear({0, 0}, 1, {3, 0}, 1), 5.0);
  EXPECT_EQ(roadplan::circle_clear({0, 0}, 1, {2, 0}, 1), 0.0);
}

TEST(EllipseConstraint, Examples)
{
  Ellipse e{{1.0, 2.0}, 3.5, 2.5, 0.0};
  EXPECT_EQ(roadplan::ellipse_constraint(e.center, e), 0.0);
  EXPECT_NEAR(roadplan::ellipse_constraint(e.center + Eigen::Vector2d(3.5, 0), e), 1.0, 1e-15);
  e.psi = M_PI / 2;
  EXPECT_NEAR(roadplan::ellipse_constraint(e.center + Eigen::Vector2d(0, 3.5), e), 1.0, 1e-12);
  EXPECT_NEAR(
    roadplan::ellipse_constraint(Eigen::Vector2d(11.0, 2.0), {{1.0, 2.0}, 3.5, 2.5, 0.0}),
    std::pow(10.0 / 3.5, 2), 1e-12);
}

TEST(EllipseConstraint, CircleCase)
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 100; ++k) {
    const Ellipse e{{u(rng), u(rng)}, 2.0, 2.0, u(rng)};
    const Eigen::Vector2d p(u(rng), u(rng));
    EXPECT_NEAR(roadplan::ellipse_constraint(p, e), (p - e.center).squaredNorm() / 4.0, 1e-12);
  }
}

TEST(Halfspaces, CornerAndOutside)
{
  VehicleParams params;
  params.wheelbase = 4.0;
  params.width = 2.0;
  const auto rect = roadplan::vehicle_halfspaces(VehicleState{}, params);
  EXPECT_TRUE(rect.center.isApprox(Eigen::Vector2d(2, 0)));
  const Eigen::Vector4d slack = rect.b - rect.A * Eigen::Vector2d(4, 1);
  EXPECT_GE(slack.minCoeff(), -1e-15);
  EXPECT_EQ((slack.array().abs() < 1e-12).count(), 2);
  EXPECT_LT((rect.b - rect.A * Eigen::Vector2d(100, 0)).minCoeff(), 0.0);
  EXPECT_LT((rect.b - rect.A * Eigen::Vector2d(100, 0))[0], 0.0);
}

TEST(Halfspaces, CornersSatisfyAndRotationReflects)
{
  const auto r0 = roadplan::vehicle_halfspaces(Eigen::Vector2d(1, -2), 0.4, 4.0, 2.0);
  const auto r1 = roadplan::vehicle_halfspaces(Eigen::Vector2d(1, -2), 0.4 + M_PI, 4.0, 2.0);
  const auto c0 = r0.corners();
  const auto c1 = r1.corners();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GE((r0.b - r0.A * c0[i]).minCoeff(), -1e-12);
    // Point reflection through the center maps corner i to corner i of the rotated rectangle.
    EXPECT_LT(((2.0 * r0.center - c0[i]) - c1[i]).norm(), 1e-12);
  }
}

TEST(Polyhedron, EmptyRejected)
{
  Eigen::Matrix<double, Eigen::Dynamic, 2> C(2, 2);
  C << 1, 0, -1, 0;
  EXPECT_THROW(ConvexPolyhedron::make(C, Eigen::Vector2d(-1, -1)), roadplan::Error);
  EXPECT_NO_THROW(ConvexPolyhedron::make(C, Eigen::Vector2d(1, 1)));
}

TEST(Polyhedron, VerticesRoundTrip)
{
  const auto sq = unit_square(2.0, 3.0);
  const auto v = sq.vertices();
  ASSERT_EQ(v.size(), 4u);
  for (const auto & p : v) EXPECT_NEAR(std::abs(p.x() - 2.0), 0.5, 1e-12);
}

TEST(Separation, SquaresOverlapAndApart)
{
  LpSolver lp;
  const auto rect = roadplan::vehicle_halfspaces(Eigen::Vector2d(0, 0), 0.0, 1.0, 1.0);
  const auto overlap = roadplan::separation_value(rect, unit_square(0.5, 0.2), lp);
  EXPECT_EQ(overlap.zeta, 0.0);
  const auto apart = roadplan::separation_value(rect, unit_square(3.0, 0.0), lp);
  EXPECT_LT(apart.zeta, 0.0);
  EXPECT_LE((apart.w.array() >= 0.0).count(), apart.w.size());
}

TEST(Separation, GaleSoundnessRandom)
{
  std::mt19937_64 rng(99);
  LpSolver lp;
  int disjoint = 0;
  for (int k = 0; k < 500; ++k) {
    const auto rect = random_rect(rng);
    const auto part = random_polygon(rng);
    const auto sep = roadplan::separation_value(rect, part, lp);
    const bool hit = primal_intersects(rect, part, 1e-9);
    EXPECT_LE(sep.zeta, 0.0);
    if (hit) {
      EXPECT_LT(std::abs(sep.zeta), 1e-9) << k;
    } else {
      EXPECT_LT(sep.zeta, -1e-8) << k;
      ++disjoint;
    }
  }
  EXPECT_GT(disjoint, 50);
  EXPECT_LT(disjoint, 450);
}

TEST(Separation, PhaseOneFeasibilityAgrees)
{
  std::mt19937_64 rng(5);
  LpSolver lp;
  for (int k = 0; k < 200; ++k) {
    const auto rect = random_rect(rng);
    const auto part = random_polygon(rng);
    const auto q = part.C.rows();
    Eigen::Matrix<double, Eigen::Dynamic, 2> H(4 + q, 2);
    Eigen::VectorXd g(4 + q);
    H << rect.A, part.C;
    g << rect.b, part.d;
    bool feasible = true;
    try {
      ConvexPolyhedron::make(H, g);
    } catch (const roadplan::Error &) {
      feasible = false;
    }
    const double zeta = roadplan::separation_value(rect, part, lp).zeta;
    EXPECT_EQ(zeta < -1e-8, !feasible) << k;
  }
}

TEST(Separation, RigidMotionInvariance)
{
  std::mt19937_64 rng(6);
  LpSolver lp;
  for (int k = 0; k < 100; ++k) {
    const auto rect = random_rect(rng);
    const auto part = random_polygon(rng);
    const roadplan::RigidTransform tf{0.8, Eigen::Vector2d(5.0, -7.0)};
    const Eigen::Vector2d c = roadplan::rotation(tf.angle) * rect.center + tf.offset;
    const auto moved_rect =
      roadplan::vehicle_halfspaces(c, rect.psi + tf.angle, rect.length, rect.width);
    const auto moved_part = roadplan::transform(part, tf);
    EXPECT_NEAR(
      roadplan::separation_value(rect, part, lp).zeta,
      roadplan::separation_value(moved_rect, moved_part, lp).zeta, 1e-8);
  }
}

TEST(Separation, CircleClearImpliesSeparated)
{
  std::mt19937_64 rng(7);
  LpSolver lp;
  int tested = 0;
  for (int k = 0; k < 300; ++k) {
    const auto rect = random_rect(rng);
    const auto part = random_polygon(rng);
    const auto verts = part.vertices();
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto & v : verts) c += v;
    c /= static_cast<double>(verts.size());
    double r = 0.0;
    for (const auto & v : verts) r = std::max(r, (v - c).norm());
    const double rr = 0.5 * std::hypot(rect.length, rect.width);
    if (roadplan::circle_clear(rect.center, rr, c, r) > 0.0) {
      ++tested;
      EXPECT_LT(roadplan::separation_value(rect, part, lp).zeta, -1e-8);
    }
  }
  EXPECT_GT(tested, 10);
}

TEST(TrajectoryClear, Cases)
{
  VehicleParams params;
  params.wheelbase = 2.7;
  params.width = 1.8;
  std::vector<roadplan::TimedState> traj;
  for (int k = 0; k <= 20; ++k) {
    traj.push_back({0.1 * k, VehicleState{-10.0 + k, 0.0, 0.0, 10.0, 0.0}});
  }
  auto empty = roadplan::trajectory_clear(traj, params, {}, 1e-3);
  EXPECT_TRUE(empty.clear);
  EXPECT_TRUE(std::isinf(empty.worst_zeta));

  roadplan::Obstacle block{{unit_square(0.0, 0.0)}, {}};
  auto hit = roadplan::trajectory_clear(traj, params, {block}, 1e-3);
  EXPECT_FALSE(hit.clear);
  EXPECT_EQ(hit.worst_zeta, 0.0);
  EXPECT_EQ(hit.worst_obstacle, 0);

  roadplan::Obstacle far{{unit_square(0.0, 10.0)}, {}};
  EXPECT_TRUE(roadplan::trajectory_clear(traj, params, {far}, 1e-3).clear);

  // A moving obstacle that crosses the path only between knots is caught by refinement.
  roadplan::Obstacle mover{{unit_square(1.5, 0.0)}, [](double t) {
                             return roadplan::RigidTransform{0.0, Eigen::Vector2d(0.0, 200.0 * (t - 1.05))};
                           }};
  EXPECT_TRUE(roadplan::trajectory_clear(traj, params, {mover}, 1e-3, 0).clear);
  EXPECT_FALSE(roadplan::trajectory_clear(traj, params, {mover}, 1e-3, 1).clear);
}

TEST(Polyhedron, PointDistance)
{
  const auto sq = unit_square(0.0, 0.0);
  EXPECT_EQ(roadplan::point_polyhedron_distance({0.1, 0.2}, sq), 0.0);
  EXPECT_NEAR(roadplan::point_polyhedron_distance({2.0, 0.0}, sq), 1.5, 1e-12);
  EXPECT_NEAR(roadplan::point_polyhedron_distance({1.5, 1.5}, sq), std::sqrt(2.0), 1e-12);
  Eigen::Matrix<double, Eigen::Dynamic, 2> C(2, 2);
  C << 1, 0, 0, 1;
  const auto quadrant = ConvexPolyhedron::make(C, Eigen::Vector2d(0, 0));
  EXPECT_NEAR(roadplan::point_polyhedron_distance({3.0, -10.0}, quadrant), 3.0, 1e-12);
  EXPECT_NEAR(roadplan::point_polyhedron_distance({3.0, 4.0}, quadrant), 5.0, 1e-12);
}
