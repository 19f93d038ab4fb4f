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


#include "scenario.hpp"

#include "roadplan/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace roadplan::app
{

using Json = nlohmann::ordered_json;

namespace
{

[[noreturn]] void invalid(const std::string & message)
{
  throw Error(ErrorCode::InvalidScenario, message);
}

std::string trim(const std::string & s)
{
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

const std::map<std::string, std::map<std::string, double>> & unit_table()
{
  const double deg = std::numbers::pi / 180.0;
  static const std::map<std::string, std::map<std::string, double>> table{
    {"length", {{"m", 1.0}, {"km", 1000.0}, {"cm", 0.01}}},
    {"time", {{"s", 1.0}, {"ms", 1e-3}, {"min", 60.0}}},
    {"speed", {{"m/s", 1.0}, {"km/h", 1.0 / 3.6}}},
    {"acceleration", {{"m/s^2", 1.0}}},
    {"angle", {{"rad", 1.0}, {"deg", deg}}},
    {"angular_rate", {{"rad/s", 1.0}, {"deg/s", deg}}},
    {"frequency", {{"Hz", 1.0}}},
    {"dimensionless", {}},
  };
  return table;
}

// Reads one JSON object and remembers which keys were consumed.
class Node
{
public:
  Node(const Json & j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object()) invalid(where() + "expected an object");
  }

  bool has(const std::string & key) const { return j_.contains(key); }

  const Json & raw(const std::string & key)
  {
    if (!has(key)) invalid(where() + "missing key '" + key + "'");
    used_.insert(key);
    return j_.at(key);
  }

  Node child(const std::string & key) { return Node(raw(key), join(key)); }

  double number(const std::string & key, const std::string & dim) { return quantity(raw(key), join(key), dim); }
  double number(const std::string & key, const std::string & dim, double fallback)
  {
    return has(key) ? number(key, dim) : fallback;
  }

  long long integer(const std::string & key, long long fallback)
  {
    if (!has(key)) return fallback;
    const Json & v = raw(key);
    if (!v.is_number_integer()) invalid(join(key) + ": expected an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string & key, bool fallback)
  {
    if (!has(key)) return fallback;
    const Json & v = raw(key);
    if (!v.is_boolean()) invalid(join(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string & key, const std::string & fallback)
  {
    if (!has(key)) return fallback;
    const Json & v = raw(key);
    if (!v.is_string()) invalid(join(key) + ": expected a string");
    return v.get<std::string>();
  }

  Eigen::Vector2d point(const std::string & key) { return point_of(raw(key), join(key)); }

  std::vector<Eigen::Vector2d> points(const std::string & key)
  {
    const Json & v = raw(key);
    if (!v.is_array()) invalid(join(key) + ": expected an array of points");
    std::vector<Eigen::Vector2d> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(point_of(v[i], join(key, i)));
    return out;
  }

  /// Array elements as nodes; each must be finished by the caller.
  std::vector<Node> items(const std::string & key)
  {
    const Json & v = raw(key);
    if (!v.is_array()) invalid(join(key) + ": expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], join(key, i));
    return out;
  }

  std::string join(const std::string & key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string join(const std::string & key, std::size_t i) const
  {
    return join(key) + "[" + std::to_string(i) + "]";
  }

  void finish() const
  {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) invalid(where() + "unknown key '" + it.key() + "'");
    }
  }

  static double quantity(const Json & v, const std::string & path, const std::string & dim)
  {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      try {
        return parse_quantity(v.get<std::string>(), dim);
      } catch (const Error & e) {
        invalid(path + ": " + e.what());
      }
    }
    invalid(path + ": expected a number or a quantity string");
  }

  /// Message prefix naming this node.
  std::string where() const { return path_.empty() ? "" : path_ + ": "; }

private:

  static Eigen::Vector2d point_of(const Json & v, const std::string & path)
  {
    if (!v.is_array() || v.size() != 2) invalid(path + ": expected [x, y]");
    return {quantity(v[0], path + "[0]", "length"), quantity(v[1], path + "[1]", "length")};
  }

  const Json & j_;
  std::string path_;
  std::set<std::string> used_;
};

Json point_json(const Eigen::Vector2d & p)
{
  return Json::array({p.x(), p.y()});
}

Json points_json(const std::vector<Eigen::Vector2d> & ps)
{
  Json out = Json::array();
  for (const auto & p : ps) out.push_back(point_json(p));
  return out;
}

VehicleParams read_params(Node n, VehicleParams p)
{
  p.wheelbase = n.number("wheelbase", "length");
  p.width = n.number("width", "length", p.width);
  p.velocity_delay = n.number("velocity_delay", "time", p.velocity_delay);
  p.v_min = n.number("v_min", "speed", p.v_min);
  p.v_max = n.number("v_max", "speed", p.v_max);
  p.delta_max = n.number("delta_max", "angle", p.delta_max);
  p.a_min = n.number("a_min", "acceleration", p.a_min);
  p.a_max = n.number("a_max", "acceleration", p.a_max);
  p.w_max = n.number("w_max", "angular_rate", p.w_max);
  n.finish();
  try {
    p.validate();
  } catch (const Error & e) {
    invalid(n.where() + e.what());
  }
  return p;
}

Json params_json(const VehicleParams & p)
{
  return Json{{"wheelbase", p.wheelbase}, {"width", p.width}, {"velocity_delay", p.velocity_delay},
              {"v_min", p.v_min},         {"v_max", p.v_max}, {"delta_max", p.delta_max},
              {"a_min", p.a_min},         {"a_max", p.a_max}, {"w_max", p.w_max}};
}

struct Bounds
{
  double x_min, x_max, y_min, y_max;
};

Bounds read_bounds(Node n)
{
  Bounds b{n.number("x_min", "length"), n.number("x_max", "length"), n.number("y_min", "length"),
           n.number("y_max", "length")};
  n.finish();
  return b;
}

Json bounds_json(double x_min, double x_max, double y_min, double y_max)
{
  return Json{{"x_min", x_min}, {"x_max", x_max}, {"y_min", y_min}, {"y_max", y_max}};
}

// Rows C y <= d; the normals are plain numbers and the offsets lengths.
ConvexPolyhedron read_halfspaces(Node & g)
{
  const std::vector<Eigen::Vector2d> rows = g.points("C");
  const Json & d = g.raw("d");
  if (!d.is_array() || d.size() != rows.size()) invalid(g.join("d") + ": need one entry per row of C");
  Eigen::Matrix<double, Eigen::Dynamic, 2> C(static_cast<Eigen::Index>(rows.size()), 2);
  Eigen::VectorXd dv(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    C.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    dv[static_cast<Eigen::Index>(i)] = Node::quantity(d[i], g.join("d", i), "length");
  }
  try {
    return ConvexPolyhedron::make(C, dv);
  } catch (const Error & e) {
    invalid(g.where() + e.what());
  }
}

PolygonSpec read_polygon(Node n)
{
  PolygonSpec p;
  if (n.has("vertices")) {
    p.vertices = n.points("vertices");
  } else {
    try {
      p.vertices = read_halfspaces(n).vertices();
    } catch (const Error & e) {
      if (e.code() == ErrorCode::InvalidScenario) throw;
      invalid(n.join("C") + ": " + e.what());
    }
  }
  if (p.vertices.size() < 3) invalid(n.join("vertices") + ": need at least three vertices");
  if (n.has("motion")) {
    Node m = n.child("motion");
    if (m.has("velocity")) {
      const Json & v = m.raw("velocity");
      if (!v.is_array() || v.size() != 2) invalid(m.join("velocity") + ": expected [vx, vy]");
      p.velocity = {Node::quantity(v[0], m.join("velocity"), "speed"),
                    Node::quantity(v[1], m.join("velocity"), "speed")};
    }
    p.angular_rate = m.number("angular_rate", "angular_rate", 0.0);
    m.finish();
  }
  n.finish();
  return p;
}

GridSection read_grid(Node n)
{
  GridSection g;
  const Bounds b = read_bounds(n.child("bounds"));
  g.grid = GridConfig{b.x_min, b.x_max, b.y_min, b.y_max, static_cast<int>(n.integer("nx", 0)),
                      static_cast<int>(n.integer("ny", 0))};
  if (g.grid.nx < 1 || g.grid.ny < 1) invalid(n.join("nx") + ": nx and ny must be at least 1");
  g.start = n.point("start");
  g.goal = n.point("goal");
  g.radius = n.number("radius", "length", 0.0);
  g.thin_tolerance = n.number("thin_tolerance", "length", 0.0);
  n.finish();
  return g;
}

LatticeSection read_lattice(Node n)
{
  LatticeSection s;
  LatticeConfig & c = s.lattice;
  const Bounds b = read_bounds(n.child("bounds"));
  c.x_min = b.x_min;
  c.x_max = b.x_max;
  c.y_min = b.y_min;
  c.y_max = b.y_max;
  c.position_cell = n.number("position_cell", "length", c.position_cell);
  c.psi_cell = n.number("psi_cell", "angle", c.psi_cell);
  c.v_min = n.number("v_min", "speed", c.v_min);
  c.v_max = n.number("v_max", "speed", c.v_max);
  c.n_v = static_cast<int>(n.integer("n_v", c.n_v));
  c.delta_min = n.number("delta_min", "angle", c.delta_min);
  c.delta_max = n.number("delta_max", "angle", c.delta_max);
  c.n_delta = static_cast<int>(n.integer("n_delta", c.n_delta));
  c.h = n.number("h", "time", c.h);
  const std::string cost = n.text("cost", "time");
  if (cost == "time") {
    c.cost = LatticeCost::Time;
  } else if (cost == "euclidean") {
    c.cost = LatticeCost::Euclidean;
  } else {
    invalid(n.join("cost") + ": expected 'time' or 'euclidean'");
  }
  c.max_nodes = static_cast<std::size_t>(n.integer("max_nodes", static_cast<long long>(c.max_nodes)));
  s.vehicle = read_params(n.child("vehicle"), VehicleParams{});
  {
    Node st = n.child("start");
    s.start = {st.number("x", "length"), st.number("y", "length"), st.number("psi", "angle", 0.0)};
    st.finish();
  }
  {
    Node g = n.child("goal");
    s.goal.position = g.point("position");
    s.goal.tolerance = g.number("tolerance", "length", s.goal.tolerance);
    s.goal.psi = g.number("psi", "angle", s.goal.psi);
    s.goal.psi_tolerance = g.number("psi_tolerance", "angle", s.goal.psi_tolerance);
    g.finish();
  }
  s.thin_tolerance = n.number("thin_tolerance", "length", s.thin_tolerance);
  n.finish();
  return s;
}

OcpSection read_ocp(Node n)
{
  OcpSection s;
  s.n = static_cast<int>(n.integer("n", 0));
  const std::string method = n.text("method", "rk4");
  if (method == "rk4") {
    s.method = Integrator::RK4;
  } else if (method == "euler") {
    s.method = Integrator::Euler;
  } else {
    invalid(n.join("method") + ": expected 'euler' or 'rk4'");
  }
  s.max_iterations = static_cast<int>(n.integer("max_iterations", s.max_iterations));
  if (n.has("parking")) {
    Node p = n.child("parking");
    ocp::ParkingSettings & ps = s.parking;
    ps.wheelbase = p.number("wheelbase", "length", ps.wheelbase);
    ps.width = p.number("width", "length", ps.width);
    ps.wheel_side = p.number("wheel_side", "dimensionless", ps.wheel_side);
    ps.tf_guess = p.number("tf_guess", "time", ps.tf_guess);
    p.finish();
  }
  if (n.has("avoidance")) {
    Node a = n.child("avoidance");
    ocp::AvoidanceSettings & as = s.avoidance;
    as.wheelbase = a.number("wheelbase", "length", as.wheelbase);
    as.width = a.number("width", "length", as.width);
    as.road_width = a.number("road_width", "length", as.road_width);
    as.v0 = a.number("v0", "speed", as.v0);
    as.v_obs = a.number("v_obs", "speed", as.v_obs);
    if (a.has("psi_obs")) {
      // Stored in degrees; a "deg" string is taken as written so the echo reads back exactly.
      const Json & v = a.raw("psi_obs");
      const std::string t = v.is_string() ? trim(v.get<std::string>()) : "";
      if (t.size() > 3 && t.substr(t.size() - 3) == "deg") {
        as.psi_obs_deg = Node::quantity(Json(trim(t.substr(0, t.size() - 3))), a.join("psi_obs"), "dimensionless");
      } else {
        as.psi_obs_deg = Node::quantity(v, a.join("psi_obs"), "angle") * 180.0 / std::numbers::pi;
      }
    }
    as.obstacle_height = a.number("obstacle_height", "length", as.obstacle_height);
    as.steer_weight = a.number("steer_weight", "dimensionless", as.steer_weight);
    as.tf_guess = a.number("tf_guess", "time", as.tf_guess);
    as.d_guess = a.number("d_guess", "length", as.d_guess);
    if (a.has("p")) {
      const Json & p = a.raw("p");
      if (!p.is_array() || p.size() != 2) invalid(a.join("p") + ": expected [p1, p2]");
      s.p = {Node::quantity(p[0], a.join("p"), "dimensionless"), Node::quantity(p[1], a.join("p"), "dimensionless")};
    }
    a.finish();
  }
  n.finish();
  return s;
}

fleet::VehicleSpec read_vehicle(Node n, int index)
{
  fleet::VehicleSpec v;
  v.id = static_cast<int>(n.integer("id", index));
  v.external = n.boolean("external", false);
  v.params = read_params(n.child("params"), fleet::default_params());
  {
    Node s = n.child("initial");
    v.initial.x = s.number("x", "length");
    v.initial.y = s.number("y", "length");
    v.initial.psi = s.number("psi", "angle", 0.0);
    v.initial.v = s.number("v", "speed", 0.0);
    v.initial.delta = s.number("delta", "angle", 0.0);
    s.finish();
  }
  v.target = n.point("target");
  if (n.has("weights")) {
    Node w = n.child("weights");
    v.weights.target = w.number("target", "dimensionless", v.weights.target);
    v.weights.accel = w.number("accel", "dimensionless", v.weights.accel);
    v.weights.steer_rate = w.number("steer_rate", "dimensionless", v.weights.steer_rate);
    w.finish();
  }
  v.rx = n.number("rx", "length", v.rx);
  v.ry = n.number("ry", "length", v.ry);
  if (n.has("script")) {
    for (Node s : n.items("script")) {
      fleet::ScriptSegment seg;
      seg.duration = s.number("duration", "time");
      seg.a = s.number("a", "acceleration", 0.0);
      seg.w = s.number("w", "angular_rate", 0.0);
      s.finish();
      v.script.push_back(seg);
    }
  }
  n.finish();
  return v;
}

fleet::Road read_road(Node n)
{
  fleet::Road r;
  if (n.has("region")) {
    Node g = n.child("region");
    if (g.has("vertices")) {
      r.region = ConvexPolyhedron::from_vertices(g.points("vertices"));
    } else {
      r.region = read_halfspaces(g);
    }
    g.finish();
  }
  if (n.has("obstacles")) {
    for (Node o : n.items("obstacles")) {
      Ellipse e;
      e.center = o.point("center");
      e.rx = o.number("rx", "length");
      e.ry = o.number("ry", "length");
      e.psi = o.number("psi", "angle", 0.0);
      o.finish();
      r.obstacles.push_back(e);
    }
  }
  r.obstacle_power = n.number("obstacle_power", "dimensionless", r.obstacle_power);
  n.finish();
  return r;
}

fleet::MpcSettings read_mpc(Node n)
{
  fleet::MpcSettings m;
  m.horizon = n.number("horizon", "time", m.horizon);
  m.tau = n.number("tau", "time", m.tau);
  m.grid = static_cast<int>(n.integer("grid", m.grid));
  m.radius = n.number("radius", "length", m.radius);
  if (n.has("rules")) {
    const Json & r = n.raw("rules");
    if (!r.is_array()) invalid(n.join("rules") + ": expected an array of rule names");
    m.rules.clear();
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!r[i].is_string()) invalid(n.join("rules", i) + ": expected a rule name");
      try {
        m.rules.push_back(fleet::rule_from_string(r[i].get<std::string>()));
      } catch (const Error & e) {
        invalid(n.join("rules", i) + ": " + e.what());
      }
    }
  }
  m.arrive_tol = n.number("arrive_tol", "length", m.arrive_tol);
  m.time_limit = n.number("time_limit", "time", m.time_limit);
  m.ellipse_margin = n.number("ellipse_margin", "dimensionless", m.ellipse_margin);
  m.conflict_radius = n.number("conflict_radius", "length", m.conflict_radius);
  m.crossing_sin = n.number("crossing_sin", "dimensionless", m.crossing_sin);
  m.threads = static_cast<int>(n.integer("threads", m.threads));
  m.max_iterations = static_cast<int>(n.integer("max_iterations", m.max_iterations));
  n.finish();
  return m;
}

TrackingSection read_tracking(Node n)
{
  TrackingSection t;
  if (n.has("gains")) {
    Node g = n.child("gains");
    double * k[6] = {&t.gains.k1, &t.gains.k2, &t.gains.k3, &t.gains.k4, &t.gains.k5, &t.gains.k6};
    for (int i = 0; i < 6; ++i) *k[i] = g.number("k" + std::to_string(i + 1), "dimensionless", *k[i]);
    g.finish();
  }
  t.speed = n.number("speed", "speed", t.speed);
  t.loop.rate = n.number("rate", "frequency", t.loop.rate);
  t.loop.duration = n.number("duration", "time", t.loop.duration);
  t.loop.wheelbase = n.number("wheelbase", "length", t.loop.wheelbase);
  t.loop.substeps = static_cast<int>(n.integer("substeps", t.loop.substeps));
  if (n.has("noise")) {
    Node z = n.child("noise");
    tracking::NoiseSpec ns;
    ns.position = z.number("position", "length", 0.0);
    ns.velocity = z.number("velocity", "speed", 0.0);
    z.finish();
    t.loop.noise = ns;
  }
  const std::string src = n.text("velocity_source", "direct");
  if (src == "direct") {
    t.loop.velocity = tracking::VelocitySource::Direct;
  } else if (src == "differenced") {
    t.loop.velocity = tracking::VelocitySource::Differenced;
  } else {
    invalid(n.join("velocity_source") + ": expected 'direct' or 'differenced'");
  }
  if (n.has("limits")) {
    Node l = n.child("limits");
    t.loop.limits.v_min = l.number("v_min", "speed", t.loop.limits.v_min);
    t.loop.limits.v_max = l.number("v_max", "speed", t.loop.limits.v_max);
    t.loop.limits.delta_max = l.number("delta_max", "angle", t.loop.limits.delta_max);
    l.finish();
  }
  if (n.has("track")) t.track = n.points("track");
  if (n.has("initial")) {
    Node s = n.child("initial");
    t.initial = Eigen::Vector3d(s.number("x", "length"), s.number("y", "length"), s.number("psi", "angle", 0.0));
    s.finish();
  }
  n.finish();
  return t;
}

std::string number_text(double v)
{
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double parse_quantity(const std::string & text, const std::string & dimension)
{
  const auto & table = unit_table();
  const auto dim = table.find(dimension);
  if (dim == table.end()) throw Error(ErrorCode::InvalidArgument, "unknown dimension " + dimension);
  const std::string s = trim(text);
  char * end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw Error(ErrorCode::InvalidScenario, "'" + text + "' does not start with a number");
  const std::string unit = trim(std::string(end));
  if (unit.empty()) return value;
  const auto u = dim->second.find(unit);
  if (u == dim->second.end()) {
    throw Error(ErrorCode::InvalidScenario, "unit '" + unit + "' is not a unit of " + dimension);
  }
  return value * u->second;
}

std::vector<Obstacle> Config::obstacle_set() const
{
  std::vector<Obstacle> out;
  for (const PolygonSpec & p : obstacles) {
    Obstacle o;
    o.parts.push_back(ConvexPolyhedron::from_vertices(p.vertices));
    if (p.velocity.norm() > 0.0 || p.angular_rate != 0.0) {
      Eigen::Vector2d c = Eigen::Vector2d::Zero();
      for (const auto & v : p.vertices) c += v;
      c /= static_cast<double>(p.vertices.size());
      const Eigen::Vector2d vel = p.velocity;
      const double w = p.angular_rate;
      // Rotation about the vertex centroid plus translation.
      o.motion = [c, vel, w](double t) {
        RigidTransform tf;
        tf.angle = w * t;
        tf.offset = c + vel * t - rotation(tf.angle) * c;
        return tf;
      };
    }
    out.push_back(std::move(o));
  }
  return out;
}

Config parse_config(const std::string & text)
{
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error & e) {
    invalid(std::string("not valid JSON: ") + e.what());
  }
  Node root(doc, "");
  Config c;
  c.name = root.text("name", "");
  if (root.has("seed")) {
    const Json & s = root.raw("seed");
    if (!s.is_number_unsigned()) invalid("seed: expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (root.has("output")) {
    Node o = root.child("output");
    c.out_dir = o.text("dir", c.out_dir);
    o.finish();
  }
  if (root.has("obstacles")) {
    for (Node o : root.items("obstacles")) c.obstacles.push_back(read_polygon(o));
  }
  if (root.has("planner")) {
    Node p = root.child("planner");
    if (p.has("grid")) c.grid = read_grid(p.child("grid"));
    if (p.has("lattice")) c.lattice = read_lattice(p.child("lattice"));
    p.finish();
  }
  if (root.has("ocp")) c.ocp = read_ocp(root.child("ocp"));
  if (root.has("vehicles")) {
    fleet::FleetScenario f;
    f.name = c.name;
    f.seed = c.seed;
    int i = 0;
    for (Node v : root.items("vehicles")) f.vehicles.push_back(read_vehicle(v, i++));
    if (root.has("road")) f.road = read_road(root.child("road"));
    if (root.has("mpc")) f.mpc = read_mpc(root.child("mpc"));
    f.validate();
    c.fleet = std::move(f);
  } else if (root.has("road") || root.has("mpc")) {
    invalid(std::string(root.has("road") ? "road" : "mpc") + ": needs a vehicles section");
  }
  if (root.has("tracking")) c.tracking = read_tracking(root.child("tracking"));
  root.finish();
  return c;
}

Config load_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const Config & c)
{
  Json doc;
  doc["name"] = c.name;
  doc["seed"] = c.seed;
  doc["output"] = Json{{"dir", c.out_dir}};
  if (!c.obstacles.empty()) {
    Json obs = Json::array();
    for (const PolygonSpec & p : c.obstacles) {
      Json o{{"vertices", points_json(p.vertices)}};
      if (p.velocity.norm() > 0.0 || p.angular_rate != 0.0) {
        o["motion"] = Json{{"velocity", point_json(p.velocity)}, {"angular_rate", p.angular_rate}};
      }
      obs.push_back(o);
    }
    doc["obstacles"] = obs;
  }
  if (c.grid || c.lattice) {
    Json planner;
    if (c.grid) {
      const GridSection & g = *c.grid;
      planner["grid"] = Json{{"bounds", bounds_json(g.grid.x_min, g.grid.x_max, g.grid.y_min, g.grid.y_max)},
                             {"nx", g.grid.nx},
                             {"ny", g.grid.ny},
                             {"start", point_json(g.start)},
                             {"goal", point_json(g.goal)},
                             {"radius", g.radius},
                             {"thin_tolerance", g.thin_tolerance}};
    }
    if (c.lattice) {
      const LatticeSection & s = *c.lattice;
      const LatticeConfig & l = s.lattice;
      planner["lattice"] = Json{
        {"bounds", bounds_json(l.x_min, l.x_max, l.y_min, l.y_max)},
        {"position_cell", l.position_cell},
        {"psi_cell", l.psi_cell},
        {"v_min", l.v_min},
        {"v_max", l.v_max},
        {"n_v", l.n_v},
        {"delta_min", l.delta_min},
        {"delta_max", l.delta_max},
        {"n_delta", l.n_delta},
        {"h", l.h},
        {"cost", l.cost == LatticeCost::Time ? "time" : "euclidean"},
        {"max_nodes", l.max_nodes},
        {"vehicle", params_json(s.vehicle)},
        {"start", Json{{"x", s.start.x()}, {"y", s.start.y()}, {"psi", s.start.z()}}},
        {"goal", Json{{"position", point_json(s.goal.position)},
                      {"tolerance", s.goal.tolerance},
                      {"psi", s.goal.psi},
                      {"psi_tolerance", s.goal.psi_tolerance}}},
        {"thin_tolerance", s.thin_tolerance}};
    }
    doc["planner"] = planner;
  }
  if (c.ocp) {
    const OcpSection & o = *c.ocp;
    const ocp::ParkingSettings & ps = o.parking;
    const ocp::AvoidanceSettings & as = o.avoidance;
    doc["ocp"] = Json{
      {"n", o.n},
      {"method", o.method == Integrator::RK4 ? "rk4" : "euler"},
      {"max_iterations", o.max_iterations},
      {"parking", Json{{"wheelbase", ps.wheelbase}, {"width", ps.width}, {"wheel_side", ps.wheel_side},
                       {"tf_guess", ps.tf_guess}}},
      {"avoidance", Json{{"wheelbase", as.wheelbase},
                         {"width", as.width},
                         {"road_width", as.road_width},
                         {"v0", as.v0},
                         {"v_obs", as.v_obs},
                         {"psi_obs", number_text(as.psi_obs_deg) + " deg"},
                         {"obstacle_height", as.obstacle_height},
                         {"steer_weight", as.steer_weight},
                         {"tf_guess", as.tf_guess},
                         {"d_guess", as.d_guess},
                         {"p", Json::array({o.p.x(), o.p.y()})}}}};
  }
  if (c.fleet) {
    const fleet::FleetScenario & f = *c.fleet;
    Json vehicles = Json::array();
    for (const fleet::VehicleSpec & v : f.vehicles) {
      Json j{{"id", v.id},
             {"external", v.external},
             {"params", params_json(v.params)},
             {"initial", Json{{"x", v.initial.x}, {"y", v.initial.y}, {"psi", v.initial.psi}, {"v", v.initial.v},
                              {"delta", v.initial.delta}}},
             {"target", point_json(v.target)},
             {"weights", Json{{"target", v.weights.target}, {"accel", v.weights.accel},
                              {"steer_rate", v.weights.steer_rate}}},
             {"rx", v.rx},
             {"ry", v.ry}};
      if (!v.script.empty()) {
        Json script = Json::array();
        for (const auto & s : v.script) script.push_back(Json{{"duration", s.duration}, {"a", s.a}, {"w", s.w}});
        j["script"] = script;
      }
      vehicles.push_back(j);
    }
    doc["vehicles"] = vehicles;
    Json road;
    if (f.road.region) {
      std::vector<Eigen::Vector2d> rows;
      Json d = Json::array();
      for (Eigen::Index i = 0; i < f.road.region->C.rows(); ++i) {
        rows.emplace_back(f.road.region->C(i, 0), f.road.region->C(i, 1));
        d.push_back(f.road.region->d[i]);
      }
      road["region"] = Json{{"C", points_json(rows)}, {"d", d}};
    }
    Json ellipses = Json::array();
    for (const Ellipse & e : f.road.obstacles) {
      ellipses.push_back(Json{{"center", point_json(e.center)}, {"rx", e.rx}, {"ry", e.ry}, {"psi", e.psi}});
    }
    road["obstacles"] = ellipses;
    road["obstacle_power"] = f.road.obstacle_power;
    doc["road"] = road;
    const fleet::MpcSettings & m = f.mpc;
    Json rules = Json::array();
    for (fleet::Rule r : m.rules) rules.push_back(std::string(fleet::to_string(r)));
    doc["mpc"] = Json{{"horizon", m.horizon},
                      {"tau", m.tau},
                      {"grid", m.grid},
                      {"radius", m.radius},
                      {"rules", rules},
                      {"arrive_tol", m.arrive_tol},
                      {"time_limit", m.time_limit},
                      {"ellipse_margin", m.ellipse_margin},
                      {"conflict_radius", m.conflict_radius},
                      {"crossing_sin", m.crossing_sin},
                      {"threads", m.threads},
                      {"max_iterations", m.max_iterations}};
  }
  if (c.tracking) {
    const TrackingSection & t = *c.tracking;
    const tracking::Gains & g = t.gains;
    Json j{{"gains", Json{{"k1", g.k1}, {"k2", g.k2}, {"k3", g.k3}, {"k4", g.k4}, {"k5", g.k5}, {"k6", g.k6}}},
           {"speed", t.speed},
           {"rate", t.loop.rate},
           {"duration", t.loop.duration},
           {"wheelbase", t.loop.wheelbase},
           {"substeps", t.loop.substeps}};
    if (t.loop.noise) j["noise"] = Json{{"position", t.loop.noise->position}, {"velocity", t.loop.noise->velocity}};
    j["velocity_source"] = t.loop.velocity == tracking::VelocitySource::Direct ? "direct" : "differenced";
    j["limits"] = Json{{"v_min", t.loop.limits.v_min}, {"v_max", t.loop.limits.v_max},
                       {"delta_max", t.loop.limits.delta_max}};
    if (!t.track.empty()) j["track"] = points_json(t.track);
    if (t.initial) j["initial"] = Json{{"x", t.initial->x()}, {"y", t.initial->y()}, {"psi", t.initial->z()}};
    doc["tracking"] = j;
  }
  return doc.dump(2) + "\n";
}

}  // namespace roadplan::app
