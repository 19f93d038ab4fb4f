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


#ifndef ROADPLAN__FLEET_HPP_
#define ROADPLAN__FLEET_HPP_

/**
 * @file
 * @brief Distributed hierarchical model predictive control for vehicle fleets.
 *
 * Every round, each networked vehicle solves a local optimal control problem
 * that avoids the predicted ellipses of its higher-priority neighbors, sends
 * its plan to all neighbors, and applies the first control slice. Priorities
 * are rebuilt each round from a rule list.
 */

#include "roadplan/autodiff.hpp"
#include "roadplan/collision.hpp"
#include "roadplan/dynamics.hpp"
#include "roadplan/geometry.hpp"
#include "roadplan/ocp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace roadplan::fleet
{

enum class Rule { External, RightOfWay, Adjoint, IdOrder };

std::string_view to_string(Rule rule);
/// Throws InvalidScenario for unknown names.
Rule rule_from_string(std::string_view name);

struct Weights
{
  double target{1.0};
  double accel{1.0};
  double steer_rate{10.0};
};

/// Constant controls held for a duration; used to script non-networked vehicles.
struct ScriptSegment
{
  double duration{0.0};
  double a{0.0};
  double w{0.0};
};

struct VehicleSpec
{
  int id{0};
  VehicleParams params;
  VehicleState initial;
  Eigen::Vector2d target{Eigen::Vector2d::Zero()};
  Weights weights;
  double rx{3.5};
  double ry{2.5};
  /// Non-networked vehicles follow their script and never solve.
  bool external{false};
  std::vector<ScriptSegment> script;
};

/// Parameter table defaults: wheelbase 4 m, v in [1, 10], a in [-10, 1.5], |w| <= 0.5.
VehicleParams default_params();

/// Drivable set: an optional convex region for the vehicle center and elliptic no-go zones.
struct Road
{
  std::optional<ConvexPolyhedron> region;
  std::vector<Ellipse> obstacles;
  /// Exponent p of the obstacle level sets |lon / rx|^p + |lat / ry|^p = 1; large p gives boxes.
  double obstacle_power{2.0};
};

struct MpcSettings
{
  double horizon{2.0};
  double tau{0.1};
  int grid{21};
  double radius{30.0};
  std::vector<Rule> rules{Rule::External, Rule::RightOfWay, Rule::Adjoint, Rule::IdOrder};
  double arrive_tol{0.5};
  double time_limit{60.0};
  /// Ellipse constraints in the local problems use 1 + margin as lower bound.
  double ellipse_margin{0.1};
  /// Two predicted paths conflict when they come closer than twice this radius.
  double conflict_radius{3.5};
  /// Minimum |sin| of the heading angle for the right-of-way rule to apply.
  double crossing_sin{0.5};
  /// 0 means ROADPLAN_THREADS or the hardware concurrency.
  int threads{0};
  int max_iterations{300};
};

struct FleetScenario
{
  std::string name;
  std::vector<VehicleSpec> vehicles;
  Road road;
  MpcSettings mpc;
  std::uint64_t seed{0};

  /// Throws InvalidScenario.
  void validate() const;
};

/// State and predicted trajectory a vehicle sends to its neighbors.
struct PlanMessage
{
  int sender{-1};
  double t{0.0};
  VehicleState state;
  std::vector<double> times;
  std::vector<VehicleState> states;

  /// Linear interpolation; throws MissingPlan outside the covered interval.
  VehicleState at(double time) const;
  bool covers(double t0, double t1) const;
};

struct PrioritySets
{
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<int>> higher;

  /// Checks the neighbor relation and that each neighbor pair is ordered exactly once.
  bool consistent() const;
  bool outranks(int i, int j) const;
};

/// Symmetric neighbor lists from center distances.
std::vector<std::vector<int>> neighborhoods(const std::vector<Eigen::Vector2d> & centers, double radius);

struct PriorityInput
{
  std::vector<VehicleState> states;
  std::vector<PlanMessage> plans;
  std::vector<bool> external;
  /// Infinity norm of the control bound multipliers of the last local solution.
  std::vector<double> deviation_cost;
  double conflict_radius{3.5};
  double crossing_sin{0.5};
};

struct PairDecision
{
  int winner{-1};
  int loser{-1};
  Rule rule{Rule::IdOrder};
};

struct PriorityReport
{
  std::vector<PairDecision> decisions;
  /// Edges re-decided by id order to break preference cycles.
  int cycles_broken{0};
};

/**
 * Orders every neighbor pair by the first rule that decides it, then breaks preference cycles.
 * With a previous report, a pair keeps its earlier order unless a traffic rule listed before
 * the one that decided it now applies.
 */
PrioritySets assign_priorities(
  const PriorityInput & in, const std::vector<std::vector<int>> & neighbors,
  const std::vector<Rule> & rules, PriorityReport * report = nullptr,
  const PriorityReport * previous = nullptr);

/// Local problem of vehicle j at time t_i; plans is indexed by vehicle and may hold empty entries.
ocp::OcpProblem local_ocp(
  int j, const FleetScenario & scenario, const VehicleState & state,
  const std::vector<std::optional<PlanMessage>> & plans, const std::vector<int> & higher,
  double t_i);

/// Rolls the model forward under piecewise constant controls, one row per grid interval.
std::vector<VehicleState> rollout(
  const VehicleState & state, const Eigen::MatrixXd & u, double dt, double wheelbase);

/// Message channel between vehicles; the default delivers instantly and reliably.
class Channel
{
public:
  virtual ~Channel() = default;
  virtual void send(int to, const PlanMessage & message) = 0;
  /// Removes and returns everything queued for the receiver.
  virtual std::vector<PlanMessage> receive(int to) = 0;
};

class IdealChannel : public Channel
{
public:
  explicit IdealChannel(int vehicles) : inbox_(vehicles) {}
  void send(int to, const PlanMessage & message) override;
  std::vector<PlanMessage> receive(int to) override;

private:
  std::vector<std::vector<PlanMessage>> inbox_;
};

struct RoundLog
{
  int round{0};
  int vehicle{0};
  std::string status;
  /// Number of higher-priority neighbors in the governing round.
  int priority_rank{0};
  /// Smallest ellipse value against those neighbors over the applied slice, +inf without any.
  double min_ellipse_value{0.0};
  int sent{0};
  int received{0};
};

class World
{
public:
  /// Validates the scenario and solves the solo bootstrap plans.
  explicit World(FleetScenario scenario, std::unique_ptr<Channel> channel = {});

  /// One round of solve, exchange, priority update and control application.
  void round();
  /// Rounds until every vehicle is done.
  void run();
  bool done() const;

  double time() const { return t_; }
  int rounds() const { return round_; }
  const FleetScenario & scenario() const { return scenario_; }
  const std::vector<VehicleState> & states() const { return states_; }
  const std::vector<bool> & arrived() const { return arrived_; }
  /// Applied motion sampled at tau / 5.
  const std::vector<std::vector<TimedState>> & trajectories() const { return traj_; }
  const PrioritySets & priorities() const { return prio_; }
  const PriorityReport & priority_report() const { return report_; }
  /// Priority sets of every round, index 0 after the bootstrap.
  const std::vector<PrioritySets> & priority_history() const { return history_; }
  const std::vector<RoundLog> & logs() const { return logs_; }
  const std::vector<double> & deviation_costs() const { return deviation_; }
  /// Smallest safety value over all sampled times and governed pairs.
  double min_safety() const { return min_safety_; }

private:
  struct Solved
  {
    bool ok{false};
    std::string status;
    ocp::OcpSolution sol;
    PlanMessage plan;
    double deviation{0.0};
  };

  bool active(int i) const;
  Solved solve_local(int j, const std::vector<int> & higher) const;
  PlanMessage braking_plan(int j) const;
  PlanMessage sensed_plan(int j) const;
  void exchange();
  void prioritize();
  ScriptSegment script_at(int j, double t) const;

  FleetScenario scenario_;
  std::unique_ptr<Channel> channel_;
  double t_{0.0};
  int round_{0};
  std::vector<VehicleState> states_;
  std::vector<bool> arrived_;
  std::vector<std::vector<TimedState>> traj_;
  std::vector<std::optional<ocp::OcpSolution>> last_;
  std::vector<PlanMessage> own_;
  std::vector<double> deviation_;
  std::vector<std::vector<std::optional<PlanMessage>>> inbox_;
  std::vector<int> sent_, received_;
  PrioritySets prio_;
  std::vector<PrioritySets> history_;
  PriorityReport report_;
  std::vector<RoundLog> logs_;
  double min_safety_;
};

/// Round log as CSV with columns round, vehicle, solve_status (solver status text), priority_rank, min_ellipse_value.
void write_round_log(const std::string & path, const std::vector<RoundLog> & logs);
/// Per-vehicle trajectory CSV with columns t, x, y, psi, v, delta.
void write_trajectory_csv(const std::string & path, const std::vector<TimedState> & trajectory);

/// Builtin fixtures: a car passing a car that parks, a narrow passage, a three-way crossing.
FleetScenario parked_car_scenario();
FleetScenario narrow_passage_scenario();
FleetScenario intersection_scenario();

// Spline-following simplification: every vehicle moves along its own curve with speed v.

struct SplineAgent
{
  CubicSpline path;
  double s{0.0};
  double s_target{0.0};
  double v_min{1.0};
  double v_max{10.0};
};

struct ArcPlan
{
  std::vector<double> times;
  std::vector<double> s;

  /// Linear interpolation; throws MissingPlan outside the covered interval.
  double at(double time) const;
};

/// Point on the curve for any scalar type, using the same pieces as CubicSpline::eval.
template <class S>
void spline_point(const CubicSpline & c, const S & s, S & x, S & y)
{
  const std::vector<double> & b = c.breakpoints();
  const Waypoints & p = c.points();
  const std::vector<Eigen::Vector2d> & m = c.moments();
  const double sv = ad::real(s);
  if (sv <= b.front() || sv >= b.back()) {
    const Eigen::Vector2d e = c.eval(sv);
    x = S(0.0) * s + e.x();
    y = S(0.0) * s + e.y();
    return;
  }
  std::size_t i = 0;
  while (i + 2 < b.size() && sv >= b[i + 1]) ++i;
  const double h = b[i + 1] - b[i];
  const S a = (b[i + 1] - s) / h;
  const S q = (s - b[i]) / h;
  const S ca = (a * a * a - a) * (h * h / 6.0);
  const S cq = (q * q * q - q) * (h * h / 6.0);
  x = a * p[i].x() + q * p[i + 1].x() + ca * m[i].x() + cq * m[i + 1].x();
  y = a * p[i].y() + q * p[i + 1].y() + ca * m[i].y() + cq * m[i + 1].y();
}

ocp::OcpProblem spline_follow_ocp(
  int j, const std::vector<SplineAgent> & agents, const std::vector<std::optional<ArcPlan>> & plans,
  const std::vector<int> & higher, double r, double t_i, double horizon);

/// Solves the problem above on grid points and returns the predicted arc lengths.
ArcPlan solve_spline_follow(
  int j, const std::vector<SplineAgent> & agents, const std::vector<std::optional<ArcPlan>> & plans,
  const std::vector<int> & higher, double r, double t_i, double horizon, int grid,
  ocp::OcpSolution * out = nullptr);

}  // namespace roadplan::fleet

#endif  // ROADPLAN__FLEET_HPP_
