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


#ifndef ROADPLAN__COLLISION_HPP_
#define ROADPLAN__COLLISION_HPP_

#include "roadplan/dynamics.hpp"
#include "roadplan/geometry.hpp"
#include "roadplan/lpsolve.hpp"

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <vector>

namespace roadplan
{

/// Region { y : C y <= d } in the plane.
struct ConvexPolyhedron
{
  Eigen::Matrix<double, Eigen::Dynamic, 2> C;
  Eigen::VectorXd d;

  /// Checks shape and non-emptiness; throws InvalidArgument.
  static ConvexPolyhedron make(const Eigen::Matrix<double, Eigen::Dynamic, 2> & C, const Eigen::VectorXd & d);
  /// Half-space form of the convex hull of the given vertices.
  static ConvexPolyhedron from_vertices(const Waypoints & vertices);

  bool contains(const Eigen::Vector2d & p, double tol = 0.0) const;
  /// Vertices in counter-clockwise order, for bounded regions.
  Waypoints vertices() const;
};

/// Planar rigid motion y -> R(angle) y + offset.
struct RigidTransform
{
  double angle{0.0};
  Eigen::Vector2d offset{Eigen::Vector2d::Zero()};
};

ConvexPolyhedron transform(const ConvexPolyhedron & part, const RigidTransform & tf);

struct Obstacle
{
  std::vector<ConvexPolyhedron> parts;
  std::function<RigidTransform(double)> motion;

  /// Parts at time t, moved when a motion law is present.
  std::vector<ConvexPolyhedron> at(double t) const;
};

/// Vehicle footprint A(t) z <= b(t), rectangle of the given length and width around r_c.
struct VehicleRect
{
  Eigen::Matrix<double, 4, 2> A;
  Eigen::Vector4d b;
  Eigen::Vector2d center;
  double psi{0.0};
  double length{0.0};
  double width{0.0};

  Waypoints corners() const;
};

struct Ellipse
{
  Eigen::Vector2d center{Eigen::Vector2d::Zero()};
  double rx{1.0};
  double ry{1.0};
  double psi{0.0};
};

/// Euclidean distance from p to the region, zero inside.
double point_polyhedron_distance(const Eigen::Vector2d & p, const ConvexPolyhedron & part);

double circle_clear(const Eigen::Vector2d & ca, double ra, const Eigen::Vector2d & cb, double rb);

/// (p - c)' Q(psi) (p - c); values >= 1 lie outside the ellipse.
double ellipse_constraint(const Eigen::Vector2d & p, const Ellipse & e);

template <class S>
S ellipse_value(const S & px, const S & py, const S & cx, const S & cy, const S & psi, double rx, double ry)
{
  using std::cos;
  using std::sin;
  const S dx = px - cx;
  const S dy = py - cy;
  const S c = cos(psi);
  const S s = sin(psi);
  const S lon = c * dx + s * dy;
  const S lat = -s * dx + c * dy;
  return lon * lon / (rx * rx) + lat * lat / (ry * ry);
}

VehicleRect vehicle_halfspaces(const VehicleState & state, const VehicleParams & params);
VehicleRect vehicle_halfspaces(const Eigen::Vector2d & center, double psi, double length, double width);

struct Separation
{
  double zeta{0.0};
  Eigen::VectorXd w;
};

/// Optimal value of the separation LP; negative exactly when the two regions are disjoint.
Separation separation_value(const VehicleRect & rect, const ConvexPolyhedron & part, LpSolver & lp);

struct TimedState
{
  double t{0.0};
  VehicleState state;
};

struct ClearanceReport
{
  bool clear{true};
  double worst_t{0.0};
  int worst_obstacle{-1};
  int worst_part{-1};
  double worst_zeta{-std::numeric_limits<double>::infinity()};
};

/// Checks zeta <= -eps on the knots and on `refine` interior samples of every interval.
ClearanceReport trajectory_clear(
  const std::vector<TimedState> & trajectory, const VehicleParams & params,
  const std::vector<Obstacle> & obstacles, double eps = 1e-3, int refine = 1);

}  // namespace roadplan

#endif  // ROADPLAN__COLLISION_HPP_
