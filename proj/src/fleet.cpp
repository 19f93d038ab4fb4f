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


#include "roadplan/fleet.hpp"

#include "roadplan/csv.hpp"
#include "roadplan/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>
#include <utility>

namespace roadplan::fleet
{

namespace
{

constexpr double kInfD = std::numeric_limits<double>::infinity();

[[noreturn]] void bad_scenario(const std::string & what)
{
  throw Error(ErrorCode::InvalidScenario, what);
}

Eigen::Vector2d center_of(const VehicleState & s, double wheelbase)
{
  return Eigen::Vector2d(s.x, s.y) + 0.5 * wheelbase * Eigen::Vector2d(std::cos(s.psi), std::sin(s.psi));
}

VehicleState lerp(const VehicleState & a, const VehicleState & b, double w)
{
  VehicleState r;
  r.x = a.x + w * (b.x - a.x);
  r.y = a.y + w * (b.y - a.y);
  r.psi = a.psi + w * (b.psi - a.psi);
  r.v = a.v + w * (b.v - a.v);
  r.delta = a.delta + w * (b.delta - a.delta);
  return r;
}

// One RK4 step of the rate controlled model.
VehicleState rk4(const VehicleState & s, double a, double w, double h, double wheelbase)
{
  using Z = std::array<double, 5>;
  const double u[2] = {a, w};
  auto f = [&](const Z & z) {
    Z dz;
    rate_controlled_rhs(z.data(), u, wheelbase, dz.data());
    return dz;
  };
  const Z z0{s.x, s.y, s.psi, s.v, s.delta};
  auto add = [](const Z & z, const Z & d, double c) {
    Z r;
    for (int i = 0; i < 5; ++i) r[i] = z[i] + c * d[i];
    return r;
  };
  const Z k1 = f(z0);
  const Z k2 = f(add(z0, k1, 0.5 * h));
  const Z k3 = f(add(z0, k2, 0.5 * h));
  const Z k4 = f(add(z0, k3, h));
  Z z;
  for (int i = 0; i < 5; ++i) z[i] = z0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return VehicleState{z[0], z[1], z[2], z[3], z[4]};
}

// Scripted vehicles may come to rest but never reverse.
VehicleState scripted_step(VehicleState s, double a, double w, double h, double wheelbase)
{
  if (s.v <= 0.0 && a < 0.0) a = 0.0;
  s = rk4(s, a, w, h, wheelbase);
  s.v = std::max(s.v, 0.0);
  return s;
}

int thread_count(int configured, int jobs)
{
  int n = configured;
  if (n <= 0) {
    if (const char * env = std::getenv("ROADPLAN_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, std::max(1, jobs));
}

// Predicted centers and headings of one higher-priority vehicle on the local grid.
struct Track
{
  std::vector<double> cx, cy, psi;
  double rx{1.0};
  double ry{1.0};
};

template <class S>
S obstacle_value(const S & px, const S & py, const Ellipse & e, double power)
{
  using std::pow;
  using ad::pow;
  const double c = std::cos(e.psi);
  const double s = std::sin(e.psi);
  const S dx = px - e.center.x();
  const S dy = py - e.center.y();
  const S lon = (c * dx + s * dy) / e.rx;
  const S lat = (c * dy - s * dx) / e.ry;
  if (power == 2.0) return lon * lon + lat * lat;
  return pow(lon * lon, 0.5 * power) + pow(lat * lat, 0.5 * power);
}

struct LocalModel
{
  double wheelbase{4.0};
  double dt{0.1};
  Eigen::Vector2d target{Eigen::Vector2d::Zero()};
  Weights weights;
  std::array<double, 5> z0{};
  Eigen::Matrix<double, Eigen::Dynamic, 2> C;
  Eigen::VectorXd d;
  std::vector<Ellipse> obstacles;
  double power{2.0};
  std::vector<Track> tracks;

  template <class S>
  void dynamics(const S * z, const S * u, const S *, const S *, S * dz) const
  {
    rate_controlled_rhs(z, u, wheelbase, dz);
  }

  template <class S>
  S lagrange(const S *, const S * u, const S *, const S *) const
  {
    return weights.accel * u[0] * u[0] + weights.steer_rate * u[1] * u[1];
  }

  // Every row reads g >= lower.
  template <class S>
  void path(const S & t, const S * z, const S *, const S *, S * g) const
  {
    using std::cos;
    using std::sin;
    const double tt = ad::real(t);
    const S cx = z[0] + 0.5 * wheelbase * cos(z[2]);
    const S cy = z[1] + 0.5 * wheelbase * sin(z[2]);
    int r = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) g[r++] = d(i) - C(i, 0) * cx - C(i, 1) * cy;
    for (const Ellipse & e : obstacles) g[r++] = obstacle_value(cx, cy, e, power);
    const auto m = static_cast<std::size_t>(std::lround(tt / dt));
    for (const Track & k : tracks) {
      const std::size_t i = std::min(m, k.cx.size() - 1);
      g[r++] = ellipse_value(cx, cy, S(k.cx[i]), S(k.cy[i]), S(k.psi[i]), k.rx, k.ry);
    }
  }

  template <class S>
  void boundary(const S * z0v, const S *, const S &, const S *, const S *, S * r) const
  {
    for (int i = 0; i < 5; ++i) r[i] = z0v[i] - z0[i];
  }

  template <class S>
  S mayer(const S * zf, const S &, const S *, const S *) const
  {
    const S ex = zf[0] - target.x();
    const S ey = zf[1] - target.y();
    return weights.target * (ex * ex + ey * ey);
  }
};

struct SplineModel
{
  double dt{0.1};
  double s0{0.0};
  double s_target{0.0};
  double r{1.0};
  const CubicSpline * path_j{nullptr};
  // Predicted positions of the higher-priority vehicles on the grid.
  std::vector<std::vector<Eigen::Vector2d>> others;

  template <class S>
  void dynamics(const S *, const S * u, const S *, const S *, S * dz) const
  {
    dz[0] = S(0.0) + u[0];
  }

  template <class S>
  S lagrange(const S *, const S *, const S *, const S *) const
  {
    return S(0.0);
  }

  template <class S>
  void path(const S & t, const S * z, const S *, const S *, S * g) const
  {
    const double tt = ad::real(t);
    S x, y;
    spline_point(*path_j, z[0], x, y);
    const auto m = static_cast<std::size_t>(std::lround(tt / dt));
    for (std::size_t k = 0; k < others.size(); ++k) {
      const Eigen::Vector2d & o = others[k][std::min(m, others[k].size() - 1)];
      const S ex = x - o.x();
      const S ey = y - o.y();
      g[k] = ex * ex + ey * ey - r * r;
    }
  }

  template <class S>
  void boundary(const S * z0v, const S *, const S &, const S *, const S *, S * res) const
  {
    res[0] = z0v[0] - s0;
  }

  template <class S>
  S mayer(const S * zf, const S &, const S *, const S *) const
  {
    const S e = zf[0] - s_target;
    return 0.5 * e * e;
  }
};

}  // namespace

std::string_view to_string(Rule rule)
{
  switch (rule) {
    case Rule::External: return "external";
    case Rule::RightOfWay: return "right_of_way";
    case Rule::Adjoint: return "adjoint";
    case Rule::IdOrder: return "id_order";
  }
  return "unknown";
}

Rule rule_from_string(std::string_view name)
{
  for (Rule r : {Rule::External, Rule::RightOfWay, Rule::Adjoint, Rule::IdOrder}) {
    if (to_string(r) == name) return r;
  }
  bad_scenario("unknown priority rule '" + std::string(name) + "'");
}

VehicleParams default_params()
{
  VehicleParams p;
  p.wheelbase = 4.0;
  p.width = 2.0;
  p.v_min = 1.0;
  p.v_max = 10.0;
  p.a_min = -10.0;
  p.a_max = 1.5;
  p.w_max = 0.5;
  p.delta_max = M_PI / 6.0;
  return p;
}

void FleetScenario::validate() const
{
  if (vehicles.empty()) bad_scenario("scenario has no vehicles");
  const MpcSettings & m = mpc;
  if (!(m.tau > 0.0) || !(m.horizon > m.tau)) bad_scenario("need horizon > tau > 0");
  if (!(m.radius > 0.0)) bad_scenario("communication radius must be positive");
  if (m.grid < 2) bad_scenario("local grid needs at least two points");
  const double dt = m.horizon / (m.grid - 1);
  const double ratio = m.tau / dt;
  if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9) {
    bad_scenario("tau must be a whole multiple of the local grid step");
  }
  if (!(m.arrive_tol > 0.0) || !(m.time_limit > 0.0)) bad_scenario("arrival tolerance and time limit must be positive");
  if (!(road.obstacle_power >= 2.0)) bad_scenario("obstacle exponent must be at least 2");
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const VehicleSpec & v = vehicles[i];
    if (v.id != static_cast<int>(i)) bad_scenario("vehicle ids must be 0..N-1 in order");
    try {
      v.params.validate();
    } catch (const Error & e) {
      bad_scenario("vehicle " + std::to_string(i) + ": " + e.what());
    }
    if (!(v.rx > 0.0) || !(v.ry > 0.0)) bad_scenario("safety half-radii must be positive");
    if (!v.external && (v.initial.v < v.params.v_min - 1e-9 || v.initial.v > v.params.v_max + 1e-9)) {
      bad_scenario("initial speed of vehicle " + std::to_string(i) + " outside its bounds");
    }
    for (const ScriptSegment & s : v.script) {
      if (!(s.duration >= 0.0)) bad_scenario("script segments need a non-negative duration");
    }
  }
  const int rows = static_cast<int>(vehicles.size() - 1 + road.obstacles.size() +
                                    (road.region ? road.region->d.size() : 0));
  if (rows > nlp::kMaxBlockInputs) bad_scenario("too many path rows for one local problem");
}

VehicleState PlanMessage::at(double time) const
{
  if (times.empty() || time < times.front() - 1e-9 || time > times.back() + 1e-9) {
    throw Error(ErrorCode::MissingPlan, "plan of vehicle " + std::to_string(sender) + " does not cover t = " +
                                          std::to_string(time));
  }
  const auto it = std::upper_bound(times.begin(), times.end(), time);
  if (it == times.end()) return states.back();
  if (it == times.begin()) return states.front();
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double w = (time - times[i]) / (times[i + 1] - times[i]);
  return lerp(states[i], states[i + 1], w);
}

bool PlanMessage::covers(double t0, double t1) const
{
  return !times.empty() && times.front() <= t0 + 1e-9 && times.back() >= t1 - 1e-9;
}

bool PrioritySets::outranks(int i, int j) const
{
  const auto & h = higher[static_cast<std::size_t>(j)];
  return std::find(h.begin(), h.end(), i) != h.end();
}

bool PrioritySets::consistent() const
{
  const std::size_t n = neighbors.size();
  if (higher.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (int j : neighbors[i]) {
      if (j == static_cast<int>(i) || j < 0 || j >= static_cast<int>(n)) return false;
      const auto & back = neighbors[static_cast<std::size_t>(j)];
      if (std::find(back.begin(), back.end(), static_cast<int>(i)) == back.end()) return false;
      if (outranks(j, static_cast<int>(i)) == outranks(static_cast<int>(i), j)) return false;
    }
    for (int j : higher[i]) {
      if (std::find(neighbors[i].begin(), neighbors[i].end(), j) == neighbors[i].end()) return false;
    }
  }
  return true;
}

std::vector<std::vector<int>> neighborhoods(const std::vector<Eigen::Vector2d> & centers, double radius)
{
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  const int n = static_cast<int>(centers.size());
  std::vector<std::vector<int>> nh(centers.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((centers[i] - centers[j]).norm() <= radius) {
        nh[i].push_back(j);
        nh[j].push_back(i);
      }
    }
  }
  return nh;
}

namespace
{

// Winner of the pair (i, j) under one rule, or -1 when the rule does not decide it.
int apply_rule(Rule rule, const PriorityInput & in, int i, int j)
{
  switch (rule) {
    case Rule::External: {
      const bool ei = i < static_cast<int>(in.external.size()) && in.external[i];
      const bool ej = j < static_cast<int>(in.external.size()) && in.external[j];
      if (ei == ej) return -1;
      return ei ? i : j;
    }
    case Rule::RightOfWay: {
      if (in.plans.size() <= static_cast<std::size_t>(std::max(i, j))) return -1;
      const PlanMessage & pi = in.plans[i];
      const PlanMessage & pj = in.plans[j];
      double closest = kInfD;
      for (const VehicleState & a : pi.states) {
        for (const VehicleState & b : pj.states) {
          closest = std::min(closest, std::hypot(a.x - b.x, a.y - b.y));
        }
      }
      if (!(closest < 2.0 * in.conflict_radius)) return -1;
      const double psi_i = in.states[i].psi;
      const double psi_j = in.states[j].psi;
      // Heading of i relative to j; positive means i comes from j's right.
      const double c = std::sin(psi_i - psi_j);
      if (std::abs(c) < in.crossing_sin) return -1;
      return c > 0.0 ? i : j;
    }
    case Rule::Adjoint: {
      if (in.deviation_cost.size() <= static_cast<std::size_t>(std::max(i, j))) return -1;
      const double a = in.deviation_cost[i];
      const double b = in.deviation_cost[j];
      if (std::abs(a - b) <= 1e-6 * std::max({1.0, std::abs(a), std::abs(b)})) return -1;
      return a > b ? i : j;
    }
    case Rule::IdOrder:
      return std::min(i, j);
  }
  return -1;
}

// Finds one directed cycle among winner -> loser edges; returns edge indices.
std::vector<std::size_t> find_cycle(int n, const std::vector<PairDecision> & edges)
{
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < edges.size(); ++e) out[edges[e].winner].push_back(e);
  std::vector<int> color(static_cast<std::size_t>(n), 0);
  std::vector<std::size_t> via(static_cast<std::size_t>(n), 0);
  std::vector<std::size_t> cycle;
  std::function<bool(int)> dfs = [&](int v) {
    color[v] = 1;
    for (std::size_t e : out[v]) {
      const int w = edges[e].loser;
      if (color[w] == 1) {
        cycle.push_back(e);
        for (int x = v; x != w; x = edges[via[x]].winner) cycle.push_back(via[x]);
        return true;
      }
      if (color[w] == 0) {
        via[w] = e;
        if (dfs(w)) return true;
      }
    }
    color[v] = 2;
    return false;
  };
  for (int v = 0; v < n; ++v) {
    if (color[v] == 0 && dfs(v)) break;
  }
  return cycle;
}

}  // namespace

PrioritySets assign_priorities(
  const PriorityInput & in, const std::vector<std::vector<int>> & neighbors,
  const std::vector<Rule> & rules, PriorityReport * report, const PriorityReport * previous)
{
  const int n = static_cast<int>(neighbors.size());
  auto precedence = [&](Rule r) {
    const auto it = std::find(rules.begin(), rules.end(), r);
    return static_cast<int>(it - rules.begin());
  };
  std::vector<PairDecision> edges;
  for (int i = 0; i < n; ++i) {
    for (int j : neighbors[i]) {
      if (j <= i) continue;
      PairDecision dec{std::min(i, j), std::max(i, j), Rule::IdOrder};
      for (Rule r : rules) {
        const int w = apply_rule(r, in, i, j);
        if (w >= 0) {
          dec = PairDecision{w, w == i ? j : i, r};
          break;
        }
      }
      if (previous) {
        for (const PairDecision & old : previous->decisions) {
          const bool same = (old.winner == i && old.loser == j) || (old.winner == j && old.loser == i);
          // Only a traffic rule of higher precedence may reorder a pair that stays in contact;
          // cost comparisons would otherwise flip as soon as the yielding vehicle brakes.
          const bool traffic = dec.rule == Rule::External || dec.rule == Rule::RightOfWay;
          if (same && !(traffic && precedence(dec.rule) < precedence(old.rule))) dec = old;
        }
      }
      edges.push_back(dec);
    }
  }
  int broken = 0;
  for (;;) {
    const std::vector<std::size_t> cycle = find_cycle(n, edges);
    if (cycle.empty()) break;
    // Re-decide the weakest edge of the cycle that id order would reverse.
    std::size_t pick = cycle.front();
    int weakest = -1;
    for (std::size_t e : cycle) {
      if (edges[e].winner < edges[e].loser) continue;
      const int strength = static_cast<int>(edges[e].rule);
      if (strength > weakest) {
        weakest = strength;
        pick = e;
      }
    }
    std::swap(edges[pick].winner, edges[pick].loser);
    edges[pick].rule = Rule::IdOrder;
    ++broken;
  }
  PrioritySets ps;
  ps.neighbors = neighbors;
  ps.higher.assign(neighbors.size(), {});
  for (const PairDecision & e : edges) ps.higher[e.loser].push_back(e.winner);
  for (auto & h : ps.higher) std::sort(h.begin(), h.end());
  if (report) {
    report->decisions = edges;
    report->cycles_broken = broken;
  }
  return ps;
}

ocp::OcpProblem local_ocp(
  int j, const FleetScenario & scenario, const VehicleState & state,
  const std::vector<std::optional<PlanMessage>> & plans, const std::vector<int> & higher, double t_i)
{
  if (j < 0 || j >= static_cast<int>(scenario.vehicles.size())) {
    throw Error(ErrorCode::InvalidArgument, "vehicle index out of range");
  }
  const VehicleSpec & v = scenario.vehicles[j];
  const MpcSettings & m = scenario.mpc;
  LocalModel model;
  model.wheelbase = v.params.wheelbase;
  model.dt = m.horizon / (m.grid - 1);
  model.target = v.target;
  model.weights = v.weights;
  model.z0 = {state.x, state.y, state.psi, state.v, state.delta};
  if (scenario.road.region) {
    model.C = scenario.road.region->C;
    model.d = scenario.road.region->d;
  } else {
    model.C.resize(0, 2);
    model.d.resize(0);
  }
  model.obstacles = scenario.road.obstacles;
  model.power = scenario.road.obstacle_power;
  for (int k : higher) {
    if (k < 0 || k >= static_cast<int>(plans.size()) || !plans[k] || !plans[k]->covers(t_i, t_i + m.horizon)) {
      throw Error(ErrorCode::MissingPlan, "vehicle " + std::to_string(j) + " has no plan of vehicle " +
                                            std::to_string(k) + " covering its horizon");
    }
    const VehicleSpec & o = scenario.vehicles[k];
    Track tr;
    tr.rx = o.rx;
    tr.ry = o.ry;
    for (int i = 0; i < m.grid; ++i) {
      const VehicleState s = plans[k]->at(t_i + i * model.dt);
      const Eigen::Vector2d c = center_of(s, o.params.wheelbase);
      tr.cx.push_back(c.x());
      tr.cy.push_back(c.y());
      tr.psi.push_back(s.psi);
    }
    model.tracks.push_back(std::move(tr));
  }

  ocp::OcpProblem p;
  p.nz = 5;
  p.nu = 2;
  p.n_boundary = 5;
  p.n_path = static_cast<int>(model.d.size() + model.obstacles.size() + model.tracks.size());
  if (p.n_path > nlp::kMaxBlockInputs) throw Error(ErrorCode::InvalidArgument, "too many path rows");
  for (Eigen::Index i = 0; i < model.d.size(); ++i) p.path_lower.push_back(0.0);
  for (std::size_t i = 0; i < model.obstacles.size(); ++i) p.path_lower.push_back(1.0);
  for (std::size_t i = 0; i < model.tracks.size(); ++i) p.path_lower.push_back(1.0 + m.ellipse_margin);
  p.path_upper.assign(p.path_lower.size(), ocp::kInf);
  const VehicleParams & vp = v.params;
  p.z_lower = {-ocp::kInf, -ocp::kInf, -ocp::kInf, vp.v_min, -vp.delta_max};
  p.z_upper = {ocp::kInf, ocp::kInf, ocp::kInf, vp.v_max, vp.delta_max};
  p.u_lower = {vp.a_min, -vp.w_max};
  p.u_upper = {vp.a_max, vp.w_max};
  p.free_final_time = false;
  p.path_at_start = false;
  p.tf = m.horizon;
  p.guess_start = Eigen::Map<const Eigen::Matrix<double, 5, 1>>(model.z0.data());
  p.guess_end = p.guess_start;
  p.bind(model);
  return p;
}

std::vector<VehicleState> rollout(
  const VehicleState & state, const Eigen::MatrixXd & u, double dt, double wheelbase)
{
  std::vector<VehicleState> out{state};
  for (Eigen::Index k = 0; k < u.rows(); ++k) out.push_back(rk4(out.back(), u(k, 0), u(k, 1), dt, wheelbase));
  return out;
}

void IdealChannel::send(int to, const PlanMessage & message)
{
  inbox_.at(static_cast<std::size_t>(to)).push_back(message);
}

std::vector<PlanMessage> IdealChannel::receive(int to)
{
  return std::exchange(inbox_.at(static_cast<std::size_t>(to)), {});
}

World::World(FleetScenario scenario, std::unique_ptr<Channel> channel)
: scenario_(std::move(scenario)), channel_(std::move(channel)), min_safety_(kInfD)
{
  scenario_.validate();
  const std::size_t n = scenario_.vehicles.size();
  if (!channel_) channel_ = std::make_unique<IdealChannel>(static_cast<int>(n));
  for (const VehicleSpec & v : scenario_.vehicles) {
    states_.push_back(v.initial);
    traj_.push_back({TimedState{0.0, v.initial}});
  }
  arrived_.assign(n, false);
  last_.assign(n, std::nullopt);
  own_.assign(n, PlanMessage{});
  deviation_.assign(n, 0.0);
  inbox_.assign(n, std::vector<std::optional<PlanMessage>>(n));
  sent_.assign(n, 0);
  received_.assign(n, 0);
  prio_.neighbors.assign(n, {});
  prio_.higher.assign(n, {});

  // Solo plans give the first priority decision something to compare.
  for (std::size_t j = 0; j < n; ++j) {
    if (scenario_.vehicles[j].external) {
      own_[j] = sensed_plan(static_cast<int>(j));
      continue;
    }
    Solved s = solve_local(static_cast<int>(j), {});
    own_[j] = s.ok ? s.plan : braking_plan(static_cast<int>(j));
    deviation_[j] = s.deviation;
    if (s.ok) last_[j] = std::move(s.sol);
  }
  exchange();
  prioritize();
}

bool World::active(int i) const
{
  return !arrived_[static_cast<std::size_t>(i)];
}

bool World::done() const
{
  if (t_ >= scenario_.mpc.time_limit - 1e-9) return true;
  for (std::size_t i = 0; i < arrived_.size(); ++i) {
    if (!scenario_.vehicles[i].external && !arrived_[i]) return false;
  }
  return true;
}

ScriptSegment World::script_at(int j, double t) const
{
  double start = 0.0;
  for (const ScriptSegment & s : scenario_.vehicles[j].script) {
    if (t < start + s.duration - 1e-9) return s;
    start += s.duration;
  }
  return ScriptSegment{kInfD, 0.0, 0.0};
}

PlanMessage World::sensed_plan(int j) const
{
  // Others only see the current state and controls of a non-networked vehicle and hold them.
  const MpcSettings & m = scenario_.mpc;
  const double dt = m.horizon / (m.grid - 1);
  const ScriptSegment now = script_at(j, t_);
  const double wheelbase = scenario_.vehicles[j].params.wheelbase;
  PlanMessage msg;
  msg.sender = j;
  msg.t = t_;
  msg.state = states_[j];
  const int steps = m.grid - 1 + static_cast<int>(std::lround(m.tau / dt));
  VehicleState s = states_[j];
  for (int k = 0; k <= steps; ++k) {
    msg.times.push_back(t_ + k * dt);
    msg.states.push_back(s);
    for (int sub = 0; sub < 5; ++sub) s = scripted_step(s, now.a, now.w, dt / 5.0, wheelbase);
  }
  return msg;
}

namespace
{

// Plan message from grid states, extended by holding the last control for one slice.
PlanMessage make_plan(
  int sender, double t, const std::vector<VehicleState> & states, const Eigen::RowVector2d & last_u,
  double dt, double tau, double wheelbase)
{
  PlanMessage msg;
  msg.sender = sender;
  msg.t = t;
  msg.state = states.front();
  for (std::size_t k = 0; k < states.size(); ++k) {
    msg.times.push_back(t + static_cast<double>(k) * dt);
    msg.states.push_back(states[k]);
  }
  const int extra = static_cast<int>(std::lround(tau / dt));
  for (int k = 0; k < extra; ++k) {
    msg.states.push_back(rk4(msg.states.back(), last_u(0), last_u(1), dt, wheelbase));
    msg.times.push_back(msg.times.back() + dt);
  }
  return msg;
}

Eigen::MatrixXd braking_controls(const VehicleState & s, const VehicleParams & p, int intervals, double dt)
{
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(intervals, 2);
  double v = s.v;
  for (int k = 0; k < intervals; ++k) {
    u(k, 0) = std::clamp((p.v_min - v) / dt, p.a_min, 0.0);
    v += u(k, 0) * dt;
  }
  return u;
}

}  // namespace

PlanMessage World::braking_plan(int j) const
{
  const MpcSettings & m = scenario_.mpc;
  const double dt = m.horizon / (m.grid - 1);
  const VehicleParams & p = scenario_.vehicles[j].params;
  const Eigen::MatrixXd u = braking_controls(states_[j], p, m.grid - 1, dt);
  return make_plan(j, t_, rollout(states_[j], u, dt, p.wheelbase), u.bottomRows(1), dt, m.tau, p.wheelbase);
}

World::Solved World::solve_local(int j, const std::vector<int> & higher) const
{
  const MpcSettings & m = scenario_.mpc;
  const double dt = m.horizon / (m.grid - 1);
  const VehicleParams & vp = scenario_.vehicles[j].params;
  Solved out;
  try {
    const ocp::DiscreteOcp d =
      ocp::discretize(local_ocp(j, scenario_, states_[j], inbox_[j], higher, t_), {m.grid, Integrator::RK4});
    auto guess_from = [&](const Eigen::MatrixXd & u) {
      const std::vector<VehicleState> guess = rollout(states_[j], u, dt, vp.wheelbase);
      Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d.layout.size());
      for (int k = 0; k < m.grid; ++k) {
        const VehicleState & s = guess[k];
        const double z[5] = {s.x, s.y, s.psi, std::clamp(s.v, vp.v_min, vp.v_max),
                             std::clamp(s.delta, -vp.delta_max, vp.delta_max)};
        for (int i = 0; i < 5; ++i) x0(d.layout.z(k, i)) = z[i];
      }
      for (int k = 0; k < m.grid - 1; ++k) {
        for (int i = 0; i < 2; ++i) x0(d.layout.u(k, i)) = u(k, i);
      }
      return x0;
    };
    // The previous controls shifted by one slice; if that start is stuck on the wrong side of a
    // neighbor, braking is the usual way out.
    std::vector<Eigen::MatrixXd> starts;
    if (last_[j]) {
      Eigen::MatrixXd u(m.grid - 1, 2);
      const Eigen::MatrixXd & prev = last_[j]->u;
      const int shift = static_cast<int>(std::lround(m.tau / dt));
      for (int k = 0; k < m.grid - 1; ++k) u.row(k) = prev.row(std::min<Eigen::Index>(k + shift, prev.rows() - 1));
      starts.push_back(u);
    } else {
      starts.push_back(Eigen::MatrixXd::Zero(m.grid - 1, 2));
    }
    if (!higher.empty()) starts.push_back(braking_controls(states_[j], vp, m.grid - 1, dt));
    nlp::Options opt;
    opt.max_iterations = m.max_iterations;
    opt.acceptable_stationarity = 1e-4;
    opt.acceptable_feasibility = 1e-6;
    opt.acceptable_complementarity = 1e-5;
    auto usable = [](const ocp::OcpSolution & s) {
      return s.status == nlp::Status::Converged || s.status == nlp::Status::Acceptable;
    };
    for (const Eigen::MatrixXd & u : starts) {
      out.sol = ocp::solve(d, guess_from(u), opt);
      if (usable(out.sol)) break;
    }
    out.status = nlp::to_string(out.sol.status);
    if (!usable(out.sol)) return out;
    out.ok = true;
    const nlp::Solution & raw = out.sol.raw;
    for (int k = 0; k < m.grid - 1; ++k) {
      for (int i = 0; i < 2; ++i) {
        const int idx = d.layout.u(k, i);
        out.deviation = std::max(out.deviation, std::abs(raw.z_lower(idx) - raw.z_upper(idx)));
      }
    }
    std::vector<VehicleState> states;
    for (int k = 0; k < m.grid; ++k) {
      states.push_back(VehicleState{out.sol.z(k, 0), out.sol.z(k, 1), out.sol.z(k, 2), out.sol.z(k, 3),
                                    out.sol.z(k, 4)});
    }
    out.plan = make_plan(j, t_, states, out.sol.u.bottomRows(1), dt, m.tau, vp.wheelbase);
  } catch (const Error & e) {
    out.ok = false;
    out.status = std::string(roadplan::to_string(e.code()));
  }
  return out;
}

void World::exchange()
{
  const std::size_t n = scenario_.vehicles.size();
  std::vector<int> ids;
  std::vector<Eigen::Vector2d> centers;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active(static_cast<int>(i))) continue;
    ids.push_back(static_cast<int>(i));
    centers.push_back(center_of(states_[i], scenario_.vehicles[i].params.wheelbase));
  }
  const auto local = neighborhoods(centers, scenario_.mpc.radius);
  std::vector<std::vector<int>> nh(n);
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (int b : local[a]) nh[ids[a]].push_back(ids[b]);
  }
  prio_.neighbors = nh;
  std::fill(sent_.begin(), sent_.end(), 0);
  std::fill(received_.begin(), received_.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k : nh[i]) {
      channel_->send(k, own_[i]);
      ++sent_[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (auto & slot : inbox_[i]) slot.reset();
    for (PlanMessage & msg : channel_->receive(static_cast<int>(i))) {
      ++received_[i];
      inbox_[i][static_cast<std::size_t>(msg.sender)] = std::move(msg);
    }
  }
}

void World::prioritize()
{
  PriorityInput in;
  in.states = states_;
  in.plans = own_;
  for (const VehicleSpec & v : scenario_.vehicles) in.external.push_back(v.external);
  in.deviation_cost = deviation_;
  in.conflict_radius = scenario_.mpc.conflict_radius;
  in.crossing_sin = scenario_.mpc.crossing_sin;
  PriorityReport report;
  prio_ = assign_priorities(in, prio_.neighbors, scenario_.mpc.rules, &report, &report_);
  report_ = std::move(report);
  history_.push_back(prio_);
}

void World::round()
{
  const MpcSettings & m = scenario_.mpc;
  const std::size_t n = scenario_.vehicles.size();
  const double dt = m.horizon / (m.grid - 1);
  const int slices = static_cast<int>(std::lround(m.tau / dt));
  const PrioritySets governing = prio_;
  ++round_;

  // 2a: independent solves against the last round's priorities and plans.
  std::vector<int> jobs;
  for (std::size_t j = 0; j < n; ++j) {
    if (active(static_cast<int>(j)) && !scenario_.vehicles[j].external) jobs.push_back(static_cast<int>(j));
  }
  std::vector<Solved> results(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t q = next++; q < jobs.size(); q = next++) {
      const int j = jobs[q];
      results[j] = solve_local(j, governing.higher[j]);
    }
  };
  const int workers = thread_count(m.threads, static_cast<int>(jobs.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread & th : pool) th.join();
  }

  std::vector<Eigen::MatrixXd> controls(n);
  std::vector<std::string> status(n, "external");
  for (std::size_t j = 0; j < n; ++j) {
    if (!active(static_cast<int>(j))) continue;
    const VehicleParams & vp = scenario_.vehicles[j].params;
    if (scenario_.vehicles[j].external) {
      own_[j] = sensed_plan(static_cast<int>(j));
      continue;
    }
    Solved & s = results[j];
    status[j] = s.status;
    if (s.ok) {
      own_[j] = std::move(s.plan);
      deviation_[j] = s.deviation;
      controls[j] = s.sol.u;
      last_[j] = std::move(s.sol);
    } else {
      own_[j] = braking_plan(static_cast<int>(j));
      controls[j] = braking_controls(states_[j], vp, m.grid - 1, dt);
      last_[j].reset();
    }
  }

  // 2b and 2c.
  exchange();
  prioritize();

  // 3: advance the true states in substeps of dt / 5 and check the governing pairs.
  std::vector<double> round_min(n, kInfD);
  std::vector<bool> reached(n, false);
  const double h = dt / 5.0;
  auto check = [&](double t) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!active(static_cast<int>(j))) continue;
      const VehicleSpec & vj = scenario_.vehicles[j];
      if (!vj.external && std::hypot(states_[j].x - vj.target.x(), states_[j].y - vj.target.y()) < m.arrive_tol) {
        reached[j] = true;
      }
      const Eigen::Vector2d cj = center_of(states_[j], vj.params.wheelbase);
      for (int k : governing.higher[j]) {
        if (!active(k)) continue;
        const VehicleSpec & vk = scenario_.vehicles[k];
        const Ellipse e{center_of(states_[k], vk.params.wheelbase), vk.rx, vk.ry, states_[k].psi};
        round_min[j] = std::min(round_min[j], ellipse_constraint(cj, e));
      }
    }
    (void)t;
  };
  check(t_);
  for (int k = 0; k < slices; ++k) {
    for (int sub = 0; sub < 5; ++sub) {
      const double ts = t_ + (k * 5 + sub) * h;
      for (std::size_t j = 0; j < n; ++j) {
        if (!active(static_cast<int>(j))) continue;
        const VehicleSpec & vj = scenario_.vehicles[j];
        if (vj.external) {
          const ScriptSegment seg = script_at(static_cast<int>(j), ts);
          states_[j] = scripted_step(states_[j], seg.a, seg.w, h, vj.params.wheelbase);
        } else {
          states_[j] = rk4(states_[j], controls[j](k, 0), controls[j](k, 1), h, vj.params.wheelbase);
        }
        traj_[j].push_back(TimedState{ts + h, states_[j]});
      }
      check(ts + h);
    }
  }
  t_ += m.tau;

  for (std::size_t j = 0; j < n; ++j) {
    if (!active(static_cast<int>(j))) continue;
    RoundLog log;
    log.round = round_;
    log.vehicle = static_cast<int>(j);
    log.status = status[j];
    log.priority_rank = static_cast<int>(governing.higher[j].size());
    log.min_ellipse_value = round_min[j];
    log.sent = sent_[j];
    log.received = received_[j];
    logs_.push_back(log);
    min_safety_ = std::min(min_safety_, round_min[j]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (reached[j]) arrived_[j] = true;
  }
}

void World::run()
{
  while (!done()) round();
}

void write_round_log(const std::string & path, const std::vector<RoundLog> & logs)
{
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  out << "round,vehicle,solve_status,priority_rank,min_ellipse_value\n";
  for (const RoundLog & l : logs) {
    out << l.round << ',' << l.vehicle << ',' << l.status << ',' << l.priority_rank << ','
        << csv::format(l.min_ellipse_value) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

void write_trajectory_csv(const std::string & path, const std::vector<TimedState> & trajectory)
{
  std::vector<std::vector<double>> rows;
  for (const TimedState & s : trajectory) {
    rows.push_back({s.t, s.state.x, s.state.y, s.state.psi, s.state.v, s.state.delta});
  }
  csv::write(path, {"t", "x", "y", "psi", "v", "delta"}, rows);
}

namespace
{

VehicleSpec make_vehicle(int id, double x, double y, double psi, double v, Eigen::Vector2d target)
{
  VehicleSpec s;
  s.id = id;
  s.params = default_params();
  s.initial = VehicleState{x, y, psi, v, 0.0};
  s.target = target;
  return s;
}

ConvexPolyhedron strip(double lo, double hi, bool vertical)
{
  Eigen::Matrix<double, Eigen::Dynamic, 2> C(2, 2);
  if (vertical) {
    C << 1.0, 0.0, -1.0, 0.0;
  } else {
    C << 0.0, 1.0, 0.0, -1.0;
  }
  Eigen::VectorXd d(2);
  d << hi, -lo;
  return ConvexPolyhedron::make(C, d);
}

}  // namespace

FleetScenario parked_car_scenario()
{
  FleetScenario s;
  s.name = "parked_car";
  // Lanes at y = -2 (ours) and y = +2 on an 8 m road; the center keeps 1 m off the edges.
  s.road.region = strip(-3.0, 3.0, false);
  VehicleSpec front = make_vehicle(0, 20.0, -2.0, 0.0, 5.0, Eigen::Vector2d(41.25, -2.0));
  front.external = true;
  front.script = {{3.0, 0.0, 0.0}, {2.5, -2.0, 0.0}};
  front.params.v_min = 0.0;
  s.vehicles.push_back(front);
  s.vehicles.push_back(make_vehicle(1, 0.0, -2.0, 0.0, 5.0, Eigen::Vector2d(100.0, -2.0)));
  return s;
}

FleetScenario narrow_passage_scenario()
{
  FleetScenario s;
  s.name = "narrow_passage";
  s.road.region = strip(-3.0, 3.0, true);
  // Two bulges leave |x| <= 1 for the center at y = 0, too narrow to pass side by side.
  s.road.obstacles = {Ellipse{Eigen::Vector2d(-6.0, 0.0), 5.0, 15.0, 0.0},
                      Ellipse{Eigen::Vector2d(6.0, 0.0), 5.0, 15.0, 0.0}};
  s.vehicles.push_back(make_vehicle(0, 2.0, -35.0, M_PI / 2.0, 10.0, Eigen::Vector2d(2.0, 60.0)));
  s.vehicles.push_back(make_vehicle(1, -2.0, 40.0, -M_PI / 2.0, 10.0, Eigen::Vector2d(-2.0, -40.0)));
  return s;
}

FleetScenario intersection_scenario()
{
  FleetScenario s;
  s.name = "intersection";
  // Four blocks around two crossing 8 m roads; the center keeps 1 m off the curbs.
  const double half = 20.0;
  s.road.obstacle_power = 8.0;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      s.road.obstacles.push_back(Ellipse{Eigen::Vector2d(sx * (3.0 + half), sy * (3.0 + half)), half, half, 0.0});
    }
  }
  s.vehicles.push_back(make_vehicle(0, 2.0, -30.0, M_PI / 2.0, 5.0, Eigen::Vector2d(-30.0, 2.0)));
  s.vehicles.push_back(make_vehicle(1, -30.0, -2.0, 0.0, 5.0, Eigen::Vector2d(2.0, 30.0)));
  s.vehicles.push_back(make_vehicle(2, -2.0, 30.0, -M_PI / 2.0, 5.0, Eigen::Vector2d(-2.0, -30.0)));
  return s;
}

double ArcPlan::at(double time) const
{
  if (times.empty() || time < times.front() - 1e-9 || time > times.back() + 1e-9) {
    throw Error(ErrorCode::MissingPlan, "arc plan does not cover t = " + std::to_string(time));
  }
  const auto it = std::upper_bound(times.begin(), times.end(), time);
  if (it == times.end()) return s.back();
  if (it == times.begin()) return s.front();
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double w = (time - times[i]) / (times[i + 1] - times[i]);
  return s[i] + w * (s[i + 1] - s[i]);
}

namespace
{

SplineModel spline_model(
  int j, const std::vector<SplineAgent> & agents, const std::vector<std::optional<ArcPlan>> & plans,
  const std::vector<int> & higher, double r, double t_i, double horizon, int grid)
{
  if (j < 0 || j >= static_cast<int>(agents.size())) throw Error(ErrorCode::InvalidArgument, "agent out of range");
  const SplineAgent & a = agents[j];
  if (a.s < -1e-9 || a.s > a.path.length() + 1e-9) throw Error(ErrorCode::InvalidArgument, "s outside [0, L]");
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "security distance must be positive");
  SplineModel m;
  m.dt = horizon / (grid - 1);
  m.s0 = a.s;
  m.s_target = a.s_target;
  m.r = r;
  m.path_j = &a.path;
  for (int k : higher) {
    if (k < 0 || k >= static_cast<int>(plans.size()) || !plans[k] || plans[k]->times.empty() ||
        plans[k]->times.front() > t_i + 1e-9 || plans[k]->times.back() < t_i + horizon - 1e-9) {
      throw Error(ErrorCode::MissingPlan, "no arc plan of agent " + std::to_string(k) + " covering the horizon");
    }
    std::vector<Eigen::Vector2d> pos;
    for (int i = 0; i < grid; ++i) pos.push_back(agents[k].path.eval(plans[k]->at(t_i + i * m.dt)));
    m.others.push_back(std::move(pos));
  }
  if (m.others.size() > static_cast<std::size_t>(nlp::kMaxBlockInputs)) {
    throw Error(ErrorCode::InvalidArgument, "too many higher-priority agents");
  }
  return m;
}

ocp::OcpProblem spline_problem(const SplineModel & m, const SplineAgent & a, double horizon)
{
  ocp::OcpProblem p;
  p.nz = 1;
  p.nu = 1;
  p.n_boundary = 1;
  p.n_path = static_cast<int>(m.others.size());
  p.path_lower.assign(m.others.size(), 0.0);
  p.path_upper.assign(m.others.size(), ocp::kInf);
  p.z_lower = {-ocp::kInf};
  p.z_upper = {ocp::kInf};
  p.u_lower = {a.v_min};
  p.u_upper = {a.v_max};
  p.free_final_time = false;
  p.path_at_start = false;
  p.tf = horizon;
  p.guess_start = Eigen::VectorXd::Constant(1, a.s);
  p.guess_end = p.guess_start;
  p.bind(m);
  return p;
}

}  // namespace

ocp::OcpProblem spline_follow_ocp(
  int j, const std::vector<SplineAgent> & agents, const std::vector<std::optional<ArcPlan>> & plans,
  const std::vector<int> & higher, double r, double t_i, double horizon)
{
  const int grid = 21;
  return spline_problem(spline_model(j, agents, plans, higher, r, t_i, horizon, grid), agents[j], horizon);
}

ArcPlan solve_spline_follow(
  int j, const std::vector<SplineAgent> & agents, const std::vector<std::optional<ArcPlan>> & plans,
  const std::vector<int> & higher, double r, double t_i, double horizon, int grid, ocp::OcpSolution * out)
{
  if (grid < 2) throw Error(ErrorCode::InvalidArgument, "grid needs two points");
  const SplineModel m = spline_model(j, agents, plans, higher, r, t_i, horizon, grid);
  const ocp::DiscreteOcp d = ocp::discretize(spline_problem(m, agents[j], horizon), {grid, Integrator::RK4});
  const SplineAgent & a = agents[j];
  const double v0 = 0.5 * (a.v_min + a.v_max);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d.layout.size());
  for (int k = 0; k < grid; ++k) x0(d.layout.z(k, 0)) = a.s + v0 * k * m.dt;
  for (int k = 0; k + 1 < grid; ++k) x0(d.layout.u(k, 0)) = v0;
  ocp::OcpSolution sol = ocp::solve(d, x0);
  if (!sol.ok()) {
    throw Error(ErrorCode::SolverFailure, "spline following problem: " + nlp::to_string(sol.status));
  }
  ArcPlan plan;
  for (int k = 0; k < grid; ++k) {
    plan.times.push_back(t_i + k * m.dt);
    plan.s.push_back(sol.z(k, 0));
  }
  if (out) *out = std::move(sol);
  return plan;
}

}  // namespace roadplan::fleet
