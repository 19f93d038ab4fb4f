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


#include "roadplan/graphplan.hpp"

#include "roadplan/error.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>
#include <unordered_map>

namespace roadplan
{

std::vector<std::size_t> ShortestPaths::path_to(std::size_t v) const
{
  std::vector<std::size_t> path;
  if (!(distance(v) < kUnreachable)) return path;
  for (std::ptrdiff_t cur = static_cast<std::ptrdiff_t>(v); cur >= 0;
       cur = pred[static_cast<std::size_t>(cur)]) {
    path.push_back(static_cast<std::size_t>(cur));
  }
  std::reverse(path.begin(), path.end());
  return path;
}

ShortestPaths dijkstra(
  const GraphView & graph, std::size_t source, const std::vector<std::size_t> & targets,
  const std::function<bool(std::size_t)> & on_settle,
  const std::function<void(std::size_t, std::size_t)> & on_improve)
{
  ShortestPaths sp;
  std::vector<bool> settled;
  auto grow = [&](std::size_t v) {
    if (v >= sp.dist.size()) {
      const std::size_t n = std::max(v + 1, sp.dist.size() * 2);
      sp.dist.resize(n, kUnreachable);
      sp.pred.resize(n, -1);
      settled.resize(n, false);
    }
  };
  grow(std::max(source, graph.size_hint > 0 ? graph.size_hint - 1 : 0));
  std::vector<bool> is_target;
  std::size_t remaining = 0;
  for (std::size_t t : targets) {
    if (t >= is_target.size()) is_target.resize(t + 1, false);
    if (!is_target[t]) ++remaining;
    is_target[t] = true;
  }

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  sp.dist[source] = 0.0;
  open.emplace(0.0, source);
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (settled[u] || d > sp.dist[u]) continue;
    settled[u] = true;
    ++sp.expanded;
    if (on_settle && on_settle(u)) break;
    if (u < is_target.size() && is_target[u] && --remaining == 0) break;
    graph.edges(u, [&](std::size_t v, double cost) {
      if (cost < 0.0) {
        throw Error(ErrorCode::NegativeEdge, "negative edge cost " + std::to_string(cost));
      }
      grow(v);
      if (settled[v]) return;
      const double nd = sp.dist[u] + cost;
      if (nd < sp.dist[v]) {
        sp.dist[v] = nd;
        sp.pred[v] = static_cast<std::ptrdiff_t>(u);
        if (on_improve) on_improve(u, v);
        open.emplace(nd, v);
      }
    });
  }
  return sp;
}

Waypoints PlanResult::waypoints() const
{
  Waypoints pts;
  for (const auto & n : nodes) {
    const Eigen::Vector2d p = n.head<2>();
    if (pts.empty() || (pts.back() - p).norm() > 0.0) pts.push_back(p);
  }
  return pts;
}

namespace
{

bool disc_blocked(const Eigen::Vector2d & p, double radius, const std::vector<Obstacle> & obstacles)
{
  for (const auto & ob : obstacles) {
    for (const auto & part : ob.at(0.0)) {
      if (point_polyhedron_distance(p, part) <= radius) return true;
    }
  }
  return false;
}

}  // namespace

PlanResult grid_plan(
  const GridConfig & cfg, const std::vector<Obstacle> & obstacles, const Eigen::Vector2d & start,
  const Eigen::Vector2d & goal, double footprint_radius)
{
  if (cfg.nx < 1 || cfg.ny < 1 || !(cfg.x_max > cfg.x_min) || !(cfg.y_max > cfg.y_min)) {
    throw Error(ErrorCode::InvalidArgument, "grid needs ordered bounds and positive counts");
  }
  const double hx = cfg.hx();
  const double hy = cfg.hy();
  const std::size_t cols = static_cast<std::size_t>(cfg.nx) + 1;
  const std::size_t rows = static_cast<std::size_t>(cfg.ny) + 1;
  auto node_of = [&](const Eigen::Vector2d & p) -> std::size_t {
    const long i = std::lround((p.x() - cfg.x_min) / hx);
    const long j = std::lround((p.y() - cfg.y_min) / hy);
    if (i < 0 || j < 0 || i >= static_cast<long>(cols) || j >= static_cast<long>(rows)) {
      throw Error(ErrorCode::BoundsExceeded, "start or goal outside the grid");
    }
    return static_cast<std::size_t>(j) * cols + static_cast<std::size_t>(i);
  };
  auto position = [&](std::size_t n) {
    return Eigen::Vector2d(
      cfg.x_min + static_cast<double>(n % cols) * hx, cfg.y_min + static_cast<double>(n / cols) * hy);
  };

  std::vector<bool> blocked(cols * rows, false);
  for (std::size_t n = 0; n < blocked.size(); ++n) {
    blocked[n] = disc_blocked(position(n), footprint_radius, obstacles);
  }
  const std::size_t s = node_of(start);
  const std::size_t g = node_of(goal);
  if (blocked[s] || blocked[g]) {
    throw Error(ErrorCode::StartOrGoalBlocked, "start or goal node collides with an obstacle");
  }

  GraphView view;
  view.size_hint = cols * rows;
  view.edges = [&](std::size_t u, const std::function<void(std::size_t, double)> & sink) {
    const long i = static_cast<long>(u % cols);
    const long j = static_cast<long>(u / cols);
    for (long dj = -1; dj <= 1; ++dj) {
      for (long di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0) continue;
        const long ni = i + di;
        const long nj = j + dj;
        if (ni < 0 || nj < 0 || ni >= static_cast<long>(cols) || nj >= static_cast<long>(rows)) {
          continue;
        }
        const std::size_t v = static_cast<std::size_t>(nj) * cols + static_cast<std::size_t>(ni);
        if (blocked[v]) continue;
        sink(v, std::hypot(static_cast<double>(di) * hx, static_cast<double>(dj) * hy));
      }
    }
  };
  const ShortestPaths sp = dijkstra(view, s, {g});
  if (!(sp.distance(g) < kUnreachable)) {
    throw Error(ErrorCode::NoPath, "goal is not reachable on the grid");
  }
  PlanResult result;
  for (std::size_t n : sp.path_to(g)) {
    const Eigen::Vector2d p = position(n);
    result.nodes.emplace_back(p.x(), p.y(), 0.0);
  }
  result.cost = sp.dist[g];
  result.expanded = sp.expanded;
  return result;
}

Eigen::Vector3d lattice_transition(
  const Eigen::Vector3d & q, const KinematicInput & u, double wheelbase, double h)
{
  return Eigen::Vector3d(
    q.x() + h * u.v * std::cos(q.z()), q.y() + h * u.v * std::sin(q.z()),
    q.z() + h * u.v * std::tan(u.delta) / wheelbase);
}

namespace
{

struct CellKey
{
  long ix;
  long iy;
  long ipsi;
  bool operator==(const CellKey & o) const
  {
    return ix == o.ix && iy == o.iy && ipsi == o.ipsi;
  }
};

struct CellHash
{
  std::size_t operator()(const CellKey & k) const
  {
    std::size_t h = std::hash<long>()(k.ix);
    h ^= std::hash<long>()(k.iy) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<long>()(k.ipsi) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace

PlanResult lattice_plan(
  const LatticeConfig & cfg, const VehicleParams & params, const std::vector<Obstacle> & obstacles,
  const Eigen::Vector3d & start, const GoalRegion & goal)
{
  if (cfg.n_v < 0 || cfg.n_delta < 0 || !(cfg.h > 0.0) || !(cfg.position_cell > 0.0) ||
      !(cfg.psi_cell > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid lattice configuration");
  }
  auto inside = [&](const Eigen::Vector3d & q) {
    return q.x() >= cfg.x_min && q.x() <= cfg.x_max && q.y() >= cfg.y_min && q.y() <= cfg.y_max;
  };
  if (!inside(start)) {
    throw Error(ErrorCode::BoundsExceeded, "lattice start lies outside the state bounds");
  }

  // Controls ordered by descending speed, then by increasing steering magnitude.
  std::vector<KinematicInput> controls;
  for (int a = cfg.n_v; a >= 0; --a) {
    const double v = cfg.n_v == 0 ? cfg.v_max : cfg.v_min + (cfg.v_max - cfg.v_min) * a / cfg.n_v;
    std::vector<double> deltas;
    for (int b = 0; b <= cfg.n_delta; ++b) {
      deltas.push_back(
        cfg.n_delta == 0 ? 0.0
                         : cfg.delta_min + (cfg.delta_max - cfg.delta_min) * b / cfg.n_delta);
    }
    std::stable_sort(deltas.begin(), deltas.end(), [](double l, double r) {
      return std::abs(l) < std::abs(r) || (std::abs(l) == std::abs(r) && l > r);
    });
    for (double d : deltas) {
      if (std::abs(d) > params.delta_max + 1e-12) continue;
      if (v == 0.0) continue;
      controls.push_back({v, d});
    }
  }

  LpSolver lp;
  auto collides = [&](const Eigen::Vector3d & q) {
    VehicleState s;
    s.x = q.x();
    s.y = q.y();
    s.psi = q.z();
    const VehicleRect rect = vehicle_halfspaces(s, params);
    for (const auto & ob : obstacles) {
      for (const auto & part : ob.at(0.0)) {
        if (separation_value(rect, part, lp).zeta > -1e-9) return true;
      }
    }
    return false;
  };
  auto key_of = [&](const Eigen::Vector3d & q) {
    return CellKey{
      static_cast<long>(std::floor(q.x() / cfg.position_cell)),
      static_cast<long>(std::floor(q.y() / cfg.position_cell)),
      static_cast<long>(std::floor(wrap_angle(q.z()) / cfg.psi_cell))};
  };
  if (collides(start)) {
    throw Error(ErrorCode::StartOrGoalBlocked, "lattice start collides with an obstacle");
  }

  std::unordered_map<CellKey, std::size_t, CellHash> ids;
  std::vector<Eigen::Vector3d> state{start};
  std::vector<KinematicInput> via{KinematicInput{}};
  ids.emplace(key_of(start), 0);
  Eigen::Vector3d cand_state;
  KinematicInput cand_control;

  GraphView view;
  view.edges = [&](std::size_t u, const std::function<void(std::size_t, double)> & sink) {
    const Eigen::Vector3d q = state[u];
    for (const auto & c : controls) {
      const Eigen::Vector3d next = lattice_transition(q, c, params.wheelbase, cfg.h);
      if (!inside(next) || collides(next)) continue;
      const CellKey key = key_of(next);
      auto it = ids.find(key);
      std::size_t v = 0;
      if (it == ids.end()) {
        if (state.size() >= cfg.max_nodes) continue;
        v = state.size();
        ids.emplace(key, v);
        state.push_back(next);
        via.push_back(c);
      } else {
        v = it->second;
      }
      cand_state = next;
      cand_control = c;
      const double cost = cfg.cost == LatticeCost::Time ? cfg.h : (next - q).head<2>().norm();
      sink(v, cost);
    }
  };
  auto on_improve = [&](std::size_t, std::size_t v) {
    state[v] = cand_state;
    via[v] = cand_control;
  };
  std::ptrdiff_t reached = -1;
  auto on_settle = [&](std::size_t u) {
    const Eigen::Vector3d & q = state[u];
    if ((q.head<2>() - goal.position).norm() > goal.tolerance) return false;
    if (goal.psi_tolerance >= 0.0 && std::abs(wrap_angle(q.z() - goal.psi)) > goal.psi_tolerance) {
      return false;
    }
    reached = static_cast<std::ptrdiff_t>(u);
    return true;
  };
  const ShortestPaths sp = dijkstra(view, 0, {}, on_settle, on_improve);
  if (reached < 0) {
    throw Error(ErrorCode::NoPath, "goal region is not reachable on the lattice");
  }
  PlanResult result;
  const auto path = sp.path_to(static_cast<std::size_t>(reached));
  for (std::size_t k = 0; k < path.size(); ++k) {
    result.nodes.push_back(state[path[k]]);
    if (k > 0) result.controls.push_back(via[path[k]]);
  }
  result.cost = sp.dist[static_cast<std::size_t>(reached)];
  result.expanded = sp.expanded;
  return result;
}

CubicSpline plan_to_track(const PlanResult & plan, double tolerance)
{
  if (plan.nodes.empty()) {
    throw Error(ErrorCode::InvalidArgument, "plan is empty");
  }
  Waypoints pts = plan.waypoints();
  if (pts.size() == 1) {
    throw Error(ErrorCode::InvalidArgument, "plan has a single position");
  }
  return CubicSpline::interpolate(thin(pts, tolerance));
}

double steering_demand(const CubicSpline & spline, double wheelbase, std::size_t samples)
{
  double worst = 0.0;
  for (std::size_t k = 0; k <= samples; ++k) {
    const double s = spline.length() * static_cast<double>(k) / static_cast<double>(samples);
    const Eigen::Vector2d d = spline.eval_d(s);
    const Eigen::Vector2d dd = spline.eval_dd(s);
    const double speed = d.norm();
    if (speed < 1e-12) continue;
    const double kappa = std::abs(d.x() * dd.y() - d.y() * dd.x()) / std::pow(speed, 3);
    worst = std::max(worst, std::atan(wheelbase * kappa));
  }
  return worst;
}

}  // namespace roadplan
