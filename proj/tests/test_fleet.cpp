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
#include "roadplan/error.hpp"
#include "roadplan/fleet.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <string>

using namespace roadplan;
using namespace roadplan::fleet;

namespace
{

const double kPi = std::numbers::pi;
const double kInfD = std::numeric_limits<double>::infinity();

VehicleState state(double x, double y, double psi, double v)
{
  return VehicleState{x, y, psi, v, 0.0};
}

Eigen::Vector2d center(const VehicleState & s, double wheelbase = 4.0)
{
  return {s.x + 0.5 * wheelbase * std::cos(s.psi), s.y + 0.5 * wheelbase * std::sin(s.psi)};
}

// Plan that holds one state over [t0, t1].
PlanMessage parked(int sender, const VehicleState & s, double t0 = 0.0, double t1 = 2.1)
{
  PlanMessage m;
  m.sender = sender;
  m.t = t0;
  m.state = s;
  for (int k = 0; k <= 21; ++k) {
    m.times.push_back(t0 + (t1 - t0) * k / 21.0);
    m.states.push_back(s);
  }
  return m;
}

// Straight-line plan at constant speed.
PlanMessage driving(int sender, const VehicleState & s, double t1 = 2.1)
{
  PlanMessage m = parked(sender, s, 0.0, t1);
  for (std::size_t k = 0; k < m.times.size(); ++k) {
    m.states[k].x += s.v * m.times[k] * std::cos(s.psi);
    m.states[k].y += s.v * m.times[k] * std::sin(s.psi);
  }
  return m;
}

VehicleSpec vehicle(int id, const VehicleState & s, Eigen::Vector2d target)
{
  VehicleSpec v;
  v.id = id;
  v.params = default_params();
  v.initial = s;
  v.target = target;
  return v;
}

FleetScenario single(const VehicleState & s, Eigen::Vector2d target)
{
  FleetScenario sc;
  sc.name = "single";
  sc.vehicles.push_back(vehicle(0, s, target));
  sc.mpc.time_limit = 15.0;
  return sc;
}

bool acyclic(const PrioritySets & ps)
{
  const std::size_t n = ps.higher.size();
  std::vector<int> indeg(n, 0);
  for (std::size_t i = 0; i < n; ++i) indeg[i] = static_cast<int>(ps.higher[i].size());
  std::vector<bool> gone(n, false);
  for (std::size_t round = 0; round < n; ++round) {
    bool found = false;
    for (std::size_t i = 0; i < n && !found; ++i) {
      if (gone[i] || indeg[i] != 0) continue;
      gone[i] = found = true;
      for (std::size_t j = 0; j < n; ++j) {
        for (int h : ps.higher[j]) {
          if (h == static_cast<int>(i)) --indeg[j];
        }
      }
    }
    if (!found) return false;
  }
  return true;
}

// Time at which an arc plan first reaches s, +inf if never.
double reach_time(const ArcPlan & p, double s)
{
  for (std::size_t k = 1; k < p.s.size(); ++k) {
    if (p.s[k] >= s) {
      const double w = (s - p.s[k - 1]) / (p.s[k] - p.s[k - 1]);
      return p.times[k - 1] + w * (p.times[k] - p.times[k - 1]);
    }
  }
  return kInfD;
}

// Recomputes the safety values from the sampled trajectories and the governing priorities.
double recomputed_safety(const World & w)
{
  const FleetScenario & sc = w.scenario();
  const double tau = sc.mpc.tau;
  const double h = sc.mpc.horizon / (sc.mpc.grid - 1) / 5.0;
  const auto & traj = w.trajectories();
  double worst = kInfD;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    for (const TimedState & sj : traj[j]) {
      const int r = std::max(1, static_cast<int>(std::ceil(sj.t / tau - 1e-9)));
      if (r > w.rounds()) continue;
      const PrioritySets & gov = w.priority_history()[static_cast<std::size_t>(r - 1)];
      for (int k : gov.higher[j]) {
        const auto idx = static_cast<std::size_t>(std::lround(sj.t / h));
        if (idx >= traj[k].size()) continue;
        const TimedState & sk = traj[k][idx];
        EXPECT_NEAR(sk.t, sj.t, 1e-9);
        const VehicleSpec & vk = sc.vehicles[k];
        const Ellipse e{center(sk.state, vk.params.wheelbase), vk.rx, vk.ry, sk.state.psi};
        worst = std::min(worst, ellipse_constraint(center(sj.state, sc.vehicles[j].params.wheelbase), e));
      }
    }
  }
  return worst;
}

const World & parked_car_run()
{
  static const World w = [] {
    World x(parked_car_scenario());
    x.run();
    return x;
  }();
  return w;
}

const World & narrow_passage_run()
{
  static const World w = [] {
    World x(narrow_passage_scenario());
    x.run();
    return x;
  }();
  return w;
}

CubicSpline line(Eigen::Vector2d a, Eigen::Vector2d b)
{
  return CubicSpline::interpolate({a, 0.5 * (a + b), b});
}

}  // namespace

TEST(Rules, NamesRoundTrip)
{
  for (Rule r : {Rule::External, Rule::RightOfWay, Rule::Adjoint, Rule::IdOrder}) {
    EXPECT_EQ(rule_from_string(to_string(r)), r);
  }
  try {
    rule_from_string("loudest_horn");
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidScenario);
  }
}

TEST(Scenario, DefaultsMatchParameterTable)
{
  const VehicleParams p = default_params();
  EXPECT_DOUBLE_EQ(p.wheelbase, 4.0);
  EXPECT_DOUBLE_EQ(p.v_min, 1.0);
  EXPECT_DOUBLE_EQ(p.v_max, 10.0);
  EXPECT_DOUBLE_EQ(p.a_min, -10.0);
  EXPECT_DOUBLE_EQ(p.a_max, 1.5);
  EXPECT_DOUBLE_EQ(p.w_max, 0.5);
  const MpcSettings m;
  EXPECT_DOUBLE_EQ(m.horizon, 2.0);
  EXPECT_DOUBLE_EQ(m.tau, 0.1);
  const VehicleSpec v;
  EXPECT_DOUBLE_EQ(v.rx, 3.5);
  EXPECT_DOUBLE_EQ(v.ry, 2.5);
  EXPECT_DOUBLE_EQ(v.weights.target, 1.0);
  EXPECT_DOUBLE_EQ(v.weights.accel, 1.0);
  EXPECT_DOUBLE_EQ(v.weights.steer_rate, 10.0);
}

TEST(Scenario, ValidateRejectsBadSettings)
{
  auto expect_invalid = [](const FleetScenario & s) {
    try {
      s.validate();
      FAIL() << s.name;
    } catch (const Error & e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidScenario) << s.name;
    }
  };
  FleetScenario ok = single(state(0, 0, 0, 5), {30, 0});
  EXPECT_NO_THROW(ok.validate());
  FleetScenario empty = ok;
  empty.name = "empty";
  empty.vehicles.clear();
  expect_invalid(empty);
  FleetScenario short_horizon = ok;
  short_horizon.name = "horizon";
  short_horizon.mpc.horizon = 0.1;
  expect_invalid(short_horizon);
  FleetScenario radius = ok;
  radius.name = "radius";
  radius.mpc.radius = 0.0;
  expect_invalid(radius);
  FleetScenario slow = ok;
  slow.name = "speed";
  slow.vehicles[0].initial.v = 0.5;
  expect_invalid(slow);
}

TEST(PlanMessage, InterpolatesAndRejectsOutside)
{
  const PlanMessage m = driving(0, state(0, 0, 0, 10));
  EXPECT_NEAR(m.at(0.55).x, 5.5, 1e-12);
  EXPECT_TRUE(m.covers(0.0, 2.0));
  EXPECT_FALSE(m.covers(0.5, 2.5));
  try {
    m.at(3.0);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingPlan);
  }
}

TEST(Neighborhoods, CloseVehiclesAreMutual)
{
  const auto nh = neighborhoods({{0, 0}, {5, 0}}, 10.0);
  EXPECT_EQ(nh[0], std::vector<int>{1});
  EXPECT_EQ(nh[1], std::vector<int>{0});
}

TEST(Neighborhoods, FarVehiclesAreAlone)
{
  const auto nh = neighborhoods({{0, 0}, {20, 0}}, 10.0);
  EXPECT_TRUE(nh[0].empty());
  EXPECT_TRUE(nh[1].empty());
}

TEST(Neighborhoods, CollinearChain)
{
  const auto nh = neighborhoods({{0, 0}, {8, 0}, {16, 0}}, 10.0);
  EXPECT_EQ(nh[0].size(), 1u);
  EXPECT_EQ(nh[1].size(), 2u);
  EXPECT_EQ(nh[2].size(), 1u);
}

TEST(Neighborhoods, RandomSetsMatchPairwiseDistances)
{
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::Vector2d> c(12);
    for (auto & p : c) p = {u(rng), u(rng)};
    const auto nh = neighborhoods(c, 30.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = 0; j < c.size(); ++j) {
        const bool listed = std::find(nh[i].begin(), nh[i].end(), static_cast<int>(j)) != nh[i].end();
        EXPECT_EQ(listed, i != j && (c[i] - c[j]).norm() <= 30.0);
      }
    }
  }
}

TEST(Priorities, IsolatedVehicleHasNoHigher)
{
  PriorityInput in;
  in.states = {state(0, 0, 0, 5)};
  in.plans = {parked(0, in.states[0])};
  in.external = {false};
  in.deviation_cost = {1.0};
  const PrioritySets ps = assign_priorities(in, {{}}, MpcSettings{}.rules);
  EXPECT_TRUE(ps.higher[0].empty());
  EXPECT_TRUE(ps.consistent());
}

TEST(Priorities, HeadOnLargerDeviationCostWins)
{
  PriorityInput in;
  in.states = {state(0, -2, 0, 5), state(20, 2, kPi, 5)};
  in.plans = {driving(0, in.states[0]), driving(1, in.states[1])};
  in.external = {false, false};
  in.deviation_cost = {2.0, 5.0};
  PriorityReport report;
  const PrioritySets ps = assign_priorities(in, {{1}, {0}}, MpcSettings{}.rules, &report);
  EXPECT_TRUE(ps.outranks(1, 0));
  EXPECT_EQ(report.decisions.at(0).rule, Rule::Adjoint);
  in.deviation_cost = {5.0, 2.0};
  EXPECT_TRUE(assign_priorities(in, {{1}, {0}}, MpcSettings{}.rules).outranks(0, 1));
}

TEST(Priorities, EqualCostsFallBackToIds)
{
  PriorityInput in;
  in.states = {state(0, -2, 0, 5), state(20, 2, kPi, 5)};
  in.plans = {driving(0, in.states[0]), driving(1, in.states[1])};
  in.external = {false, false};
  in.deviation_cost = {3.0, 3.0 + 1e-9};
  PriorityReport report;
  EXPECT_TRUE(assign_priorities(in, {{1}, {0}}, MpcSettings{}.rules, &report).outranks(0, 1));
  EXPECT_EQ(report.decisions.at(0).rule, Rule::IdOrder);
}

TEST(Priorities, CarFromTheRightGoesFirst)
{
  // 0 drives north from below, 1 drives east from the left: 0 approaches from 1's right.
  PriorityInput in;
  in.states = {state(2, -15, kPi / 2, 8), state(-15, -2, 0, 8)};
  in.plans = {driving(0, in.states[0]), driving(1, in.states[1])};
  in.external = {false, false};
  in.deviation_cost = {1.0, 9.0};
  PriorityReport report;
  const PrioritySets ps = assign_priorities(in, {{1}, {0}}, MpcSettings{}.rules, &report);
  EXPECT_TRUE(ps.outranks(0, 1));
  EXPECT_EQ(report.decisions.at(0).rule, Rule::RightOfWay);
  // Without a conflict zone the geometry test stays silent.
  in.plans = {parked(0, in.states[0]), parked(1, in.states[1])};
  EXPECT_TRUE(assign_priorities(in, {{1}, {0}}, MpcSettings{}.rules).outranks(1, 0));
}

TEST(Priorities, ExternalVehiclesOutrankAll)
{
  PriorityInput in;
  in.states = {state(0, 0, 0, 5), state(10, 0, 0, 5), state(20, 0, 0, 5)};
  for (int i = 0; i < 3; ++i) in.plans.push_back(parked(i, in.states[i]));
  in.external = {false, false, true};
  in.deviation_cost = {9.0, 5.0, 0.0};
  const PrioritySets ps = assign_priorities(in, {{1, 2}, {0, 2}, {0, 1}}, MpcSettings{}.rules);
  EXPECT_TRUE(ps.higher[2].empty());
  EXPECT_TRUE(ps.outranks(2, 0));
  EXPECT_TRUE(ps.outranks(2, 1));
  EXPECT_TRUE(ps.outranks(0, 1));
}

TEST(Priorities, RuleListOrderMatters)
{
  PriorityInput in;
  in.states = {state(2, -15, kPi / 2, 8), state(-15, -2, 0, 8)};
  in.plans = {driving(0, in.states[0]), driving(1, in.states[1])};
  in.external = {false, false};
  in.deviation_cost = {1.0, 9.0};
  EXPECT_TRUE(assign_priorities(in, {{1}, {0}}, {Rule::Adjoint, Rule::RightOfWay}).outranks(1, 0));
  EXPECT_TRUE(assign_priorities(in, {{1}, {0}}, {Rule::IdOrder}).outranks(0, 1));
}

TEST(Priorities, RightOfWayCycleIsBroken)
{
  // Three headings 120 degrees apart through one point: each car has another on its right.
  PriorityInput in;
  for (int i = 0; i < 3; ++i) {
    const double psi = 2.0 * kPi * i / 3.0;
    in.states.push_back(state(-5 * std::cos(psi), -5 * std::sin(psi), psi, 5));
    in.plans.push_back(driving(i, in.states.back()));
  }
  in.external = {false, false, false};
  in.deviation_cost = {1.0, 1.0, 1.0};
  PriorityReport report;
  const PrioritySets ps = assign_priorities(in, {{1, 2}, {0, 2}, {0, 1}}, MpcSettings{}.rules, &report);
  EXPECT_GE(report.cycles_broken, 1);
  EXPECT_TRUE(ps.consistent());
  EXPECT_TRUE(acyclic(ps));
  int top = 0;
  for (const auto & h : ps.higher) top += h.empty() ? 1 : 0;
  EXPECT_EQ(top, 1);
}

TEST(Priorities, RandomInputsGiveConsistentAcyclicOrders)
{
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> pos(-20.0, 20.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  std::uniform_real_distribution<double> cost(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    PriorityInput in;
    std::vector<Eigen::Vector2d> centers;
    for (int i = 0; i < 6; ++i) {
      in.states.push_back(state(pos(rng), pos(rng), ang(rng), 6));
      in.plans.push_back(driving(i, in.states.back()));
      in.external.push_back(trial % 5 == 0 && i == 3);
      in.deviation_cost.push_back(std::round(cost(rng)));
      centers.push_back(center(in.states.back()));
    }
    const auto nh = neighborhoods(centers, 25.0);
    const PrioritySets ps = assign_priorities(in, nh, MpcSettings{}.rules);
    EXPECT_TRUE(ps.consistent());
    EXPECT_TRUE(acyclic(ps));
  }
}

TEST(Priorities, PairsKeepTheirOrderUnlessTrafficRulesApply)
{
  PriorityInput in;
  in.states = {state(0, -2, 0, 5), state(20, 2, kPi, 5)};
  in.plans = {driving(0, in.states[0]), driving(1, in.states[1])};
  in.external = {false, false};
  in.deviation_cost = {5.0, 2.0};
  PriorityReport first;
  assign_priorities(in, {{1}, {0}}, MpcSettings{}.rules, &first);
  in.deviation_cost = {2.0, 5.0};
  EXPECT_TRUE(assign_priorities(in, {{1}, {0}}, MpcSettings{}.rules, nullptr, &first).outranks(0, 1));
  // A crossing now puts 1 on the right of 0.
  in.states = {state(-15, -2, 0, 8), state(2, -15, kPi / 2, 8)};
  in.plans = {driving(0, in.states[0]), driving(1, in.states[1])};
  EXPECT_TRUE(assign_priorities(in, {{1}, {0}}, MpcSettings{}.rules, nullptr, &first).outranks(1, 0));
}

TEST(LocalOcp, FreeVehicleApproachesTarget)
{
  const FleetScenario sc = single(state(0, 0, 0, 5), {40, 10});
  const ocp::OcpProblem p = local_ocp(0, sc, sc.vehicles[0].initial, {std::nullopt}, {}, 0.0);
  const ocp::OcpSolution sol = ocp::solve(ocp::discretize(p, {21, Integrator::RK4}));
  ASSERT_TRUE(sol.ok());
  const Eigen::Vector2d start(0, 0);
  const Eigen::Vector2d end(sol.z(20, 0), sol.z(20, 1));
  const Eigen::Vector2d target(40, 10);
  EXPECT_LT((end - target).norm(), (start - target).norm() - 5.0);
  // Heading turns toward the target.
  EXPECT_GT(sol.z(20, 2), 0.0);
  for (int k = 0; k < 21; ++k) {
    EXPECT_GE(sol.z(k, 3), 1.0 - 1e-6);
    EXPECT_LE(sol.z(k, 3), 10.0 + 1e-6);
  }
  for (int k = 0; k < 20; ++k) {
    EXPECT_LE(std::abs(sol.u(k, 1)), 0.5 + 1e-6);
  }
}

TEST(LocalOcp, CannotStopAtTarget)
{
  // Already at the target, but the speed may not drop below 1 m/s.
  const FleetScenario sc = single(state(0, 0, 0, 1), {0, 0});
  const VehicleParams vp = sc.vehicles[0].params;
  double best = kInfD;
  for (double a = 0.0; a <= vp.a_max; a += 0.25) {
    for (double w = -vp.w_max; w <= vp.w_max + 1e-12; w += 0.05) {
      Eigen::MatrixXd u(20, 2);
      u.col(0).setConstant(a);
      u.col(1).setConstant(w);
      const auto traj = rollout(sc.vehicles[0].initial, u, 0.1, vp.wheelbase);
      bool feasible = true;
      for (const VehicleState & s : traj) {
        feasible = feasible && s.v >= vp.v_min - 1e-9 && std::abs(s.delta) <= vp.delta_max + 1e-9;
      }
      if (!feasible) continue;
      const double cost = std::pow(traj.back().x, 2) + std::pow(traj.back().y, 2) + 2.0 * (a * a + 10.0 * w * w);
      best = std::min(best, cost);
    }
  }
  EXPECT_GT(best, 0.1);
  EXPECT_LT(best, 4.0 + 1e-9);
  const ocp::OcpProblem p = local_ocp(0, sc, sc.vehicles[0].initial, {std::nullopt}, {}, 0.0);
  const ocp::OcpSolution sol = ocp::solve(ocp::discretize(p, {21, Integrator::RK4}));
  ASSERT_TRUE(sol.ok());
  EXPECT_GT(sol.objective, 0.0);
  EXPECT_LE(sol.objective, best + 1e-6);
}

TEST(LocalOcp, EllipseValueTenMetersAhead)
{
  FleetScenario sc = single(state(0, 0, 0, 5), {60, 0});
  sc.vehicles.push_back(vehicle(1, state(10, 0, 0, 5), {80, 0}));
  const VehicleState me = sc.vehicles[0].initial;
  const std::vector<std::optional<PlanMessage>> plans{std::nullopt, parked(1, sc.vehicles[1].initial)};
  const ocp::OcpProblem p = local_ocp(0, sc, me, plans, {1}, 0.0);
  ASSERT_EQ(p.n_path, 1);
  EXPECT_DOUBLE_EQ(p.path_lower[0], 1.0 + sc.mpc.ellipse_margin);
  const double z[5] = {me.x, me.y, me.psi, me.v, me.delta};
  double g = 0.0;
  p.f.path(0.0, z, nullptr, nullptr, &g);
  EXPECT_NEAR(g, std::pow(10.0 / 3.5, 2), 1e-12);
  EXPECT_NEAR(g, 8.163, 1e-3);
  const Ellipse e{center(sc.vehicles[1].initial), 3.5, 2.5, 0.0};
  EXPECT_NEAR(g, ellipse_constraint(center(me), e), 1e-12);
}

TEST(LocalOcp, MissingPlanIsReported)
{
  FleetScenario sc = single(state(0, 0, 0, 5), {60, 0});
  sc.vehicles.push_back(vehicle(1, state(10, 0, 0, 5), {80, 0}));
  auto expect_missing = [&](const std::vector<std::optional<PlanMessage>> & plans, double t) {
    try {
      local_ocp(0, sc, sc.vehicles[0].initial, plans, {1}, t);
      FAIL();
    } catch (const Error & e) {
      EXPECT_EQ(e.code(), ErrorCode::MissingPlan);
    }
  };
  expect_missing({std::nullopt, std::nullopt}, 0.0);
  expect_missing({std::nullopt, parked(1, sc.vehicles[1].initial)}, 0.5);
  EXPECT_NO_THROW(local_ocp(0, sc, sc.vehicles[0].initial, {std::nullopt, std::nullopt}, {}, 0.0));
}

TEST(LocalOcp, AvoidsParkedVehicleAhead)
{
  // Offset by a meter; a car dead ahead leaves no side to prefer.
  FleetScenario sc = single(state(0, 0, 0, 8), {40, 0});
  sc.vehicles.push_back(vehicle(1, state(18, -1, 0, 5), {80, -1}));
  const std::vector<std::optional<PlanMessage>> plans{std::nullopt, parked(1, sc.vehicles[1].initial)};
  const ocp::OcpProblem p = local_ocp(0, sc, sc.vehicles[0].initial, plans, {1}, 0.0);
  const ocp::OcpSolution sol = ocp::solve(ocp::discretize(p, {21, Integrator::RK4}));
  ASSERT_TRUE(sol.ok());
  const Ellipse e{center(sc.vehicles[1].initial), 3.5, 2.5, 0.0};
  for (int k = 1; k < 21; ++k) {
    const VehicleState s{sol.z(k, 0), sol.z(k, 1), sol.z(k, 2), sol.z(k, 3), sol.z(k, 4)};
    EXPECT_GE(ellipse_constraint(center(s), e), 1.1 - 1e-6);
  }
  EXPECT_GT(sol.z(20, 1), 0.5);
}

TEST(SplineFollow, SplinePointMatchesEval)
{
  const CubicSpline c = CubicSpline::interpolate({{0, 0}, {10, 5}, {20, -3}, {35, 4}, {40, 10}});
  using D = ad::Dual<double, 1>;
  for (double s = 0.0; s <= c.length(); s += c.length() / 37.0) {
    double x = 0.0;
    double y = 0.0;
    spline_point(c, s, x, y);
    const Eigen::Vector2d e = c.eval(s);
    EXPECT_NEAR(x, e.x(), 1e-12);
    EXPECT_NEAR(y, e.y(), 1e-12);
    D sd(s);
    sd.d[0] = 1.0;
    D xd;
    D yd;
    spline_point(c, sd, xd, yd);
    const Eigen::Vector2d de = c.eval_d(s);
    if (s > 0.0 && s < c.length()) {
      EXPECT_NEAR(xd.d[0], de.x(), 1e-9);
      EXPECT_NEAR(yd.d[0], de.y(), 1e-9);
    }
  }
}

TEST(SplineFollow, FreeAgentDrivesAtTopSpeed)
{
  std::vector<SplineAgent> agents{{line({0, 0}, {100, 0}), 0.0, 100.0}};
  ocp::OcpSolution sol;
  const ArcPlan plan = solve_spline_follow(0, agents, {std::nullopt}, {}, 3.0, 0.0, 2.0, 21, &sol);
  for (int k = 0; k < 20; ++k) EXPECT_NEAR(sol.u(k, 0), 10.0, 1e-5);
  EXPECT_NEAR(plan.s.back(), 20.0, 1e-5);
}

TEST(SplineFollow, NearTargetStopsOnIt)
{
  std::vector<SplineAgent> agents{{line({0, 0}, {100, 0}), 30.0, 42.0}};
  const ArcPlan plan = solve_spline_follow(0, agents, {std::nullopt}, {}, 3.0, 0.0, 2.0, 21);
  EXPECT_NEAR(plan.s.back(), 42.0, 1e-4);
}

TEST(SplineFollow, AtTargetCreepsAtMinimumSpeed)
{
  std::vector<SplineAgent> agents{{line({0, 0}, {100, 0}), 50.0, 50.0}};
  ocp::OcpSolution sol;
  solve_spline_follow(0, agents, {std::nullopt}, {}, 3.0, 0.0, 2.0, 21, &sol);
  for (int k = 0; k < 20; ++k) EXPECT_NEAR(sol.u(k, 0), 1.0, 1e-5);
  double best = kInfD;
  double best_v = 0.0;
  for (double v = 1.0; v <= 10.0; v += 0.5) {
    const double cost = 0.5 * std::pow(2.0 * v, 2);
    if (cost < best) {
      best = cost;
      best_v = v;
    }
  }
  EXPECT_DOUBLE_EQ(best_v, 1.0);
  EXPECT_NEAR(sol.objective, best, 1e-5);
}

TEST(SplineFollow, LowerPriorityAgentWaitsAtCrossing)
{
  std::vector<SplineAgent> agents{{line({-15, 0}, {15, 0}), 3.0, 30.0}, {line({0, -15}, {0, 15}), 3.0, 30.0}};
  const double r = 4.0;
  const ArcPlan first = solve_spline_follow(0, agents, {std::nullopt, std::nullopt}, {}, r, 0.0, 2.0, 21);
  const ArcPlan solo = solve_spline_follow(1, agents, {std::nullopt, std::nullopt}, {}, r, 0.0, 2.0, 21);
  const ArcPlan yielding = solve_spline_follow(1, agents, {first, std::nullopt}, {0}, r, 0.0, 2.0, 21);
  EXPECT_NEAR(reach_time(solo, 15.0), 1.2, 1e-3);
  EXPECT_GT(reach_time(yielding, 15.0), reach_time(solo, 15.0) + 0.1);
  for (std::size_t k = 1; k < yielding.s.size(); ++k) {
    const Eigen::Vector2d a = agents[0].path.eval(first.s[k]);
    const Eigen::Vector2d b = agents[1].path.eval(yielding.s[k]);
    EXPECT_GE((a - b).norm(), r - 1e-6);
  }
}

TEST(SplineFollow, MissingPlanIsReported)
{
  std::vector<SplineAgent> agents{{line({-15, 0}, {15, 0}), 3.0, 30.0}, {line({0, -15}, {0, 15}), 3.0, 30.0}};
  try {
    spline_follow_ocp(1, agents, {std::nullopt, std::nullopt}, {0}, 4.0, 0.0, 2.0);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingPlan);
  }
}

TEST(Mpc, SingleVehicleReachesTarget)
{
  World w(single(state(0, 0, 0, 5), {30, 5}));
  w.run();
  ASSERT_TRUE(w.arrived()[0]);
  EXPECT_LT(w.time(), 15.0);
  double closest = kInfD;
  for (const TimedState & s : w.trajectories()[0]) closest = std::min(closest, std::hypot(s.state.x - 30, s.state.y - 5));
  EXPECT_LT(closest, 0.5);
  for (const RoundLog & l : w.logs()) EXPECT_EQ(l.status, "converged");
}

TEST(Mpc, SeparatedVehiclesMatchSoloRuns)
{
  FleetScenario both = single(state(0, 0, 0, 5), {30, 5});
  both.vehicles.push_back(vehicle(1, state(0, 100, 0, 6), {30, 95}));
  World pair(both);
  pair.run();
  for (int i = 0; i < 2; ++i) {
    FleetScenario alone = single(both.vehicles[i].initial, both.vehicles[i].target);
    World solo(alone);
    solo.run();
    const auto & a = pair.trajectories()[i];
    const auto & b = solo.trajectories()[0];
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].state.x, b[k].state.x);
      EXPECT_EQ(a[k].state.y, b[k].state.y);
      EXPECT_EQ(a[k].state.v, b[k].state.v);
    }
  }
  for (const PrioritySets & ps : pair.priority_history()) {
    EXPECT_TRUE(ps.neighbors[0].empty());
    EXPECT_TRUE(ps.neighbors[1].empty());
  }
}

TEST(Mpc, HeadOnOrderFollowsSolvedMultipliers)
{
  FleetScenario sc = single(state(0, -2, 0, 10), {15, -2});
  sc.vehicles.push_back(vehicle(1, state(30, 2, kPi, 5), {0, 2}));
  double cost[2];
  for (int j = 0; j < 2; ++j) {
    const ocp::DiscreteOcp d = ocp::discretize(
      local_ocp(j, sc, sc.vehicles[j].initial, {std::nullopt, std::nullopt}, {}, 0.0), {21, Integrator::RK4});
    const ocp::OcpSolution sol = ocp::solve(d);
    ASSERT_TRUE(sol.ok());
    cost[j] = 0.0;
    for (int k = 0; k < 20; ++k) {
      for (int i = 0; i < 2; ++i) {
        const int idx = d.layout.u(k, i);
        cost[j] = std::max(cost[j], std::abs(sol.raw.z_lower(idx) - sol.raw.z_upper(idx)));
      }
    }
  }
  ASSERT_GT(std::abs(cost[0] - cost[1]), 1e-3 * std::max(cost[0], cost[1]));
  const World w(sc);
  EXPECT_NEAR(w.deviation_costs()[0], cost[0], 1e-4 * std::max(1.0, cost[0]));
  EXPECT_NEAR(w.deviation_costs()[1], cost[1], 1e-4 * std::max(1.0, cost[1]));
  ASSERT_EQ(w.priorities().neighbors[0], std::vector<int>{1});
  EXPECT_EQ(w.priority_report().decisions.at(0).rule, Rule::Adjoint);
  EXPECT_EQ(w.priorities().outranks(0, 1), cost[0] > cost[1]);
}

namespace
{

class DroppingChannel : public Channel
{
public:
  void send(int, const PlanMessage &) override {}
  std::vector<PlanMessage> receive(int) override { return {}; }
};

}  // namespace

TEST(Mpc, LostPlansTriggerBraking)
{
  FleetScenario sc = single(state(0, -2, 0, 8), {60, -2});
  sc.vehicles.push_back(vehicle(1, state(0, 4, 0, 8), {60, 4}));
  sc.mpc.time_limit = 0.3;
  World w(sc, std::make_unique<DroppingChannel>());
  const int lower = w.priorities().higher[0].empty() ? 1 : 0;
  w.round();
  bool logged = false;
  for (const RoundLog & l : w.logs()) {
    EXPECT_EQ(l.received, 0);
    if (l.vehicle == lower) {
      EXPECT_EQ(l.status, "MissingPlan");
      logged = true;
    } else {
      EXPECT_EQ(l.status, "converged");
    }
  }
  EXPECT_TRUE(logged);
  EXPECT_LT(w.states()[lower].v, 8.0);
  EXPECT_GE(w.states()[lower].v, 1.0 - 1e-9);
  EXPECT_DOUBLE_EQ(w.states()[lower].delta, 0.0);
}

TEST(Mpc, RoundLogWritesStatusText)
{
  World w(single(state(0, 0, 0, 5), {30, 0}));
  w.round();
  w.round();
  const auto path = std::filesystem::temp_directory_path() / "roadplan_round_log.csv";
  write_round_log(path.string(), w.logs());
  std::ifstream in(path);
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "round,vehicle,solve_status,priority_rank,min_ellipse_value");
  EXPECT_EQ(row, "1,0,converged,0,inf");
  std::filesystem::remove(path);
}

TEST(Scenarios, ParkedCarIsOvertaken)
{
  const World & w = parked_car_run();
  ASSERT_TRUE(w.arrived()[1]);
  const auto & follower = w.trajectories()[1];
  const auto & parked_car = w.trajectories()[0];
  double max_y = -kInfD;
  for (const TimedState & s : follower) max_y = std::max(max_y, s.state.y);
  EXPECT_GT(max_y, 0.0);
  // Alongside the parked car the follower is in the other lane.
  bool alongside = false;
  for (std::size_t k = 0; k < follower.size() && k < parked_car.size(); ++k) {
    if (std::abs(center(follower[k].state).x() - center(parked_car[k].state).x()) < 1.0) {
      alongside = true;
      EXPECT_GT(follower[k].state.y, -0.5);
    }
  }
  EXPECT_TRUE(alongside);
  EXPECT_NEAR(follower.back().state.y, -2.0, 0.5);
  // The scripted car stops where its script ends.
  EXPECT_NEAR(parked_car.back().state.x, 41.25, 1e-6);
  EXPECT_NEAR(parked_car.back().state.v, 0.0, 1e-9);
  for (const PrioritySets & ps : w.priority_history()) {
    if (!ps.neighbors[1].empty()) EXPECT_TRUE(ps.outranks(0, 1));
  }
  EXPECT_GE(w.min_safety(), 1.0 - 1e-3);
  EXPECT_NEAR(recomputed_safety(w), w.min_safety(), 1e-9);
}

TEST(Scenarios, NarrowPassageLowerCarWaits)
{
  const World & w = narrow_passage_run();
  ASSERT_TRUE(w.arrived()[0]);
  ASSERT_TRUE(w.arrived()[1]);
  int lower = -1;
  for (const PrioritySets & ps : w.priority_history()) {
    for (int j = 0; j < 2; ++j) {
      if (!ps.higher[j].empty()) {
        if (lower < 0) lower = j;
        EXPECT_EQ(lower, j);
      }
    }
  }
  ASSERT_GE(lower, 0);
  const int upper = 1 - lower;
  // Passage neck at y = 0; the lower car's slowest speed before reaching it.
  auto neck_time = [&](int j) {
    for (const TimedState & s : w.trajectories()[j]) {
      if (std::abs(center(s.state).y()) < 0.5) return s.t;
    }
    return kInfD;
  };
  double slowest = kInfD;
  for (const TimedState & s : w.trajectories()[lower]) {
    if (s.t < neck_time(lower)) slowest = std::min(slowest, s.state.v);
  }
  EXPECT_LT(slowest, w.scenario().vehicles[lower].initial.v);
  EXPECT_LT(neck_time(upper), neck_time(lower));
  EXPECT_GE(w.min_safety(), 1.0 - 1e-3);
  EXPECT_NEAR(recomputed_safety(w), w.min_safety(), 1e-9);
}

TEST(Scenarios, IntersectionOrderBelowLeftAbove)
{
  FleetScenario sc = intersection_scenario();
  World w(sc);
  for (int r = 0; r < 30; ++r) w.round();
  bool all_met = false;
  for (const PrioritySets & ps : w.priority_history()) {
    for (int a = 0; a < 3; ++a) {
      for (int b : ps.neighbors[a]) {
        if (a < b) EXPECT_TRUE(ps.outranks(a, b));
      }
    }
    all_met = all_met || (ps.neighbors[0].size() == 2 && ps.neighbors[1].size() == 2);
  }
  EXPECT_TRUE(all_met);
}

TEST(Invariants, HierarchyAndMessagesEveryRound)
{
  for (const World * w : {&parked_car_run(), &narrow_passage_run()}) {
    for (const PrioritySets & ps : w->priority_history()) EXPECT_TRUE(ps.consistent());
    ASSERT_EQ(static_cast<int>(w->priority_history().size()), w->rounds() + 1);
    for (const RoundLog & l : w->logs()) {
      const auto & nh = w->priority_history()[static_cast<std::size_t>(l.round)].neighbors[l.vehicle];
      EXPECT_EQ(l.sent, static_cast<int>(nh.size()));
      EXPECT_EQ(l.received, static_cast<int>(nh.size()));
    }
  }
}

TEST(Invariants, RunsAreDeterministic)
{
  World again(parked_car_scenario());
  again.run();
  const World & first = parked_car_run();
  ASSERT_EQ(again.rounds(), first.rounds());
  for (std::size_t j = 0; j < 2; ++j) {
    const auto & a = again.trajectories()[j];
    const auto & b = first.trajectories()[j];
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].state.x, b[k].state.x);
      EXPECT_EQ(a[k].state.y, b[k].state.y);
      EXPECT_EQ(a[k].state.psi, b[k].state.psi);
    }
  }
}
