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


#ifndef ROADPLAN_TOOLS__SCENARIO_HPP_
#define ROADPLAN_TOOLS__SCENARIO_HPP_

/**
 * @file
 * @brief Scenario files: one JSON document per run, every quantity in SI units.
 *
 * Numbers are read as SI values. A string such as "100 km/h" or "170 deg" is
 * converted when it is read; the unit must match the quantity. Unknown keys are
 * rejected with the dotted path of the offending key.
 */

#include "roadplan/collision.hpp"
#include "roadplan/dynamics.hpp"
#include "roadplan/fleet.hpp"
#include "roadplan/graphplan.hpp"
#include "roadplan/ocp.hpp"
#include "roadplan/tracking.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace roadplan::app
{

struct PolygonSpec
{
  Waypoints vertices;
  Eigen::Vector2d velocity{Eigen::Vector2d::Zero()};
  double angular_rate{0.0};
};

struct GridSection
{
  GridConfig grid;
  Eigen::Vector2d start{Eigen::Vector2d::Zero()};
  Eigen::Vector2d goal{Eigen::Vector2d::Zero()};
  double radius{0.0};
  double thin_tolerance{0.0};
};

struct LatticeSection
{
  LatticeConfig lattice;
  VehicleParams vehicle;
  Eigen::Vector3d start{Eigen::Vector3d::Zero()};
  GoalRegion goal;
  double thin_tolerance{0.5};
};

struct OcpSection
{
  int n{0};
  Integrator method{Integrator::RK4};
  int max_iterations{3000};
  ocp::ParkingSettings parking;
  ocp::AvoidanceSettings avoidance;
  Eigen::Vector2d p{Eigen::Vector2d::Zero()};
};

struct TrackingSection
{
  tracking::Gains gains;
  double speed{11.5};
  tracking::ClosedLoopOptions loop;
  /// Empty means the builtin elliptic circuit.
  Waypoints track;
  /// Unset means starting on the reference.
  std::optional<Eigen::Vector3d> initial;
};

struct Config
{
  std::string name;
  std::uint64_t seed{0};
  std::string out_dir{"out"};
  std::vector<PolygonSpec> obstacles;
  std::optional<GridSection> grid;
  std::optional<LatticeSection> lattice;
  std::optional<OcpSection> ocp;
  /// Vehicles, road and MPC settings; present when the file has vehicles.
  std::optional<fleet::FleetScenario> fleet;
  std::optional<TrackingSection> tracking;

  std::vector<Obstacle> obstacle_set() const;
};

/// Throws InvalidScenario naming the offending key.
Config parse_config(const std::string & text);
Config load_config(const std::string & path);
/// Canonical JSON echo; parsing it gives back the same configuration.
std::string dump_config(const Config & config);

/// Value in SI units of a quantity such as "3 km/h"; throws InvalidScenario.
double parse_quantity(const std::string & text, const std::string & dimension);

}  // namespace roadplan::app

#endif  // ROADPLAN_TOOLS__SCENARIO_HPP_
