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


#ifndef ROADPLAN__GRAPHPLAN_HPP_
#define ROADPLAN__GRAPHPLAN_HPP_

#include "roadplan/collision.hpp"
#include "roadplan/dynamics.hpp"
#include "roadplan/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace roadplan
{

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Adjacency callback: edges(u, sink) calls sink(v, cost) for every edge u -> v.
/// Node ids may appear on demand; the search grows its tables as needed.
struct GraphView
{
  std::function<void(std::size_t, const std::function<void(std::size_t, double)> &)> edges;
  std::size_t size_hint{0};
};

struct ShortestPaths
{
  std::vector<double> dist;
  std::vector<std::ptrdiff_t> pred;
  std::size_t expanded{0};

  double distance(std::size_t v) const { return v < dist.size() ? dist[v] : kUnreachable; }
  std::vector<std::size_t> path_to(std::size_t v) const;
};

/**
 * Priority queue Dijkstra. Stops once every target is settled (all nodes when targets is empty).
 * on_settle, when given, may return true to stop early. on_improve(u, v) runs whenever the
 * edge u -> v lowers the tentative distance of v. Throws NegativeEdge.
 */
ShortestPaths dijkstra(
  const GraphView & graph, std::size_t source, const std::vector<std::size_t> & targets,
  const std::function<bool(std::size_t)> & on_settle = {},
  const std::function<void(std::size_t, std::size_t)> & on_improve = {});

struct GridConfig
{
  double x_min{0.0};
  double x_max{1.0};
  double y_min{0.0};
  double y_max{1.0};
  int nx{1};
  int ny{1};

  double hx() const { return (x_max - x_min) / nx; }
  double hy() const { return (y_max - y_min) / ny; }
};

struct PlanResult
{
  /// (x, y, psi); psi is zero for grid plans.
  std::vector<Eigen::Vector3d> nodes;
  /// Lattice only: control applied on each edge.
  std::vector<KinematicInput> controls;
  double cost{0.0};
  std::size_t expanded{0};

  Waypoints waypoints() const;
};

/// 8-connected grid search; nodes whose bounding disc of the given radius meets an obstacle are removed.
PlanResult grid_plan(
  const GridConfig & cfg, const std::vector<Obstacle> & obstacles, const Eigen::Vector2d & start,
  const Eigen::Vector2d & goal, double footprint_radius);

enum class LatticeCost { Time, Euclidean };

struct LatticeConfig
{
  double x_min{-50.0};
  double x_max{50.0};
  double y_min{-50.0};
  double y_max{50.0};
  double position_cell{0.25};
  double psi_cell{2.0 * M_PI / 72.0};
  double v_min{5.0};
  double v_max{10.0};
  int n_v{1};
  double delta_min{-M_PI / 6.0};
  double delta_max{M_PI / 6.0};
  int n_delta{6};
  double h{0.25};
  LatticeCost cost{LatticeCost::Time};
  std::size_t max_nodes{2000000};
};

struct GoalRegion
{
  Eigen::Vector2d position{Eigen::Vector2d::Zero()};
  double tolerance{1.0};
  /// Heading constraint is ignored when psi_tolerance is negative.
  double psi{0.0};
  double psi_tolerance{-1.0};
};

/// One explicit Euler step of the kinematic model.
Eigen::Vector3d lattice_transition(
  const Eigen::Vector3d & q, const KinematicInput & u, double wheelbase, double h);

PlanResult lattice_plan(
  const LatticeConfig & cfg, const VehicleParams & params, const std::vector<Obstacle> & obstacles,
  const Eigen::Vector3d & start, const GoalRegion & goal);

CubicSpline plan_to_track(const PlanResult & plan, double tolerance);

/// Largest steering angle atan(l * curvature) required along the spline.
double steering_demand(const CubicSpline & spline, double wheelbase, std::size_t samples = 2000);

}  // namespace roadplan

#endif  // ROADPLAN__GRAPHPLAN_HPP_
