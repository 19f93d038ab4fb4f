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

#include "cli.hpp"

#include "acceptance.hpp"
#include "report.hpp"

#include "roadplan/csv.hpp"
#include "roadplan/error.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>

namespace roadplan::app
{

namespace
{

struct Flags
{
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> n;
  std::optional<std::string> method;
  bool verbose{false};
  bool dump{false};
  std::vector<int> criteria;
};

struct Context
{
  Config cfg;
  Flags flags;
  RunReport report;
  std::ostream & out;
  std::ostream & err;

  std::string path(const std::string & name) const
  {
    return (std::filesystem::path(report.out_dir) / name).string();
  }
};

int exit_code(ErrorCode code)
{
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::MismatchedVariant:
    case ErrorCode::DuplicatePoint:
    case ErrorCode::BoundsExceeded:
    case ErrorCode::NegativeEdge:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::StartOrGoalBlocked:
    case ErrorCode::InvalidScenario:
    case ErrorCode::IoFailure:
      return 2;
    default:
      return 1;
  }
}

[[noreturn]] void missing_section(const std::string & command, const std::string & section)
{
  throw Error(ErrorCode::InvalidScenario, command + " needs a '" + section + "' section in the scenario");
}

// Obstacle outlines as closed polygons: obstacle, part, x, y.
void write_outlines(const std::string & path, const std::vector<Obstacle> & obstacles)
{
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const auto parts = obstacles[i].at(0.0);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      Waypoints v;
      try {
        v = parts[k].vertices();
      } catch (const Error &) {
        continue;  // unbounded parts have no outline
      }
      if (v.empty()) continue;
      v.push_back(v.front());
      for (const auto & p : v) rows.push_back({static_cast<double>(i), static_cast<double>(k), p.x(), p.y()});
    }
  }
  csv::write(path, {"obstacle", "part", "x", "y"}, rows);
}

int plan_grid(Context & c)
{
  if (!c.cfg.grid) missing_section("plan-grid", "planner.grid");
  const GridSection & g = *c.cfg.grid;
  const PlanResult plan = grid_plan(g.grid, c.cfg.obstacle_set(), g.start, g.goal, g.radius);
  std::vector<std::vector<double>> rows;
  for (const auto & q : plan.nodes) rows.push_back({q.x(), q.y()});
  csv::write(c.path("grid_path.csv"), {"x", "y"}, rows);
  c.report.add_file("grid_path.csv");
  write_outlines(c.path("obstacles.csv"), c.cfg.obstacle_set());
  c.report.add_file("obstacles.csv");
  if (g.thin_tolerance > 0.0 && plan.nodes.size() > 1) {
    write_spline_csv(plan_to_track(plan, g.thin_tolerance), 400, c.path("grid_track.csv"));
    c.report.add_file("grid_track.csv");
  }
  c.report.scalar("cost", plan.cost);
  c.report.scalar("nodes", static_cast<double>(plan.nodes.size()));
  c.report.scalar("expanded", static_cast<double>(plan.expanded));
  c.report.iterations = static_cast<int>(plan.expanded);
  return 0;
}

int plan_lattice(Context & c)
{
  if (!c.cfg.lattice) missing_section("plan-lattice", "planner.lattice");
  const LatticeSection & l = *c.cfg.lattice;
  const PlanResult plan = lattice_plan(l.lattice, l.vehicle, c.cfg.obstacle_set(), l.start, l.goal);
  std::vector<std::vector<double>> rows;
  for (const auto & q : plan.nodes) rows.push_back({q.x(), q.y(), q.z()});
  csv::write(c.path("lattice_path.csv"), {"x", "y", "psi"}, rows);
  c.report.add_file("lattice_path.csv");
  write_outlines(c.path("obstacles.csv"), c.cfg.obstacle_set());
  c.report.add_file("obstacles.csv");
  c.report.scalar("cost", plan.cost);
  c.report.scalar("nodes", static_cast<double>(plan.nodes.size()));
  c.report.scalar("expanded", static_cast<double>(plan.expanded));
  if (plan.nodes.size() > 1) {
    const CubicSpline track = plan_to_track(plan, l.thin_tolerance);
    write_spline_csv(track, 400, c.path("lattice_track.csv"));
    c.report.add_file("lattice_track.csv");
    c.report.scalar("track_length", track.length());
    c.report.scalar("steering_demand", steering_demand(track, l.vehicle.wheelbase));
  }
  c.report.iterations = static_cast<int>(plan.expanded);
  return 0;
}

ocp::Discretization discretization(const OcpSection & s, int fallback)
{
  return {s.n > 0 ? s.n : fallback, s.method};
}

void record_solution(Context & c, const ocp::OcpSolution & sol, const std::string & log_name)
{
  std::ofstream log(c.path(log_name));
  log << ocp::convergence_log(sol);
  if (!log) throw Error(ErrorCode::IoFailure, "cannot write " + c.path(log_name));
  log.close();
  c.report.add_file(log_name);
  c.report.status = nlp::to_string(sol.status);
  c.report.iterations = sol.raw.iterations;
  c.report.scalar("tf", sol.tf);
  c.report.scalar("objective", sol.objective);
  c.report.scalar("max_defect", sol.max_defect);
  if (c.flags.verbose) c.err << ocp::convergence_log(sol);
}

int solve_parking(Context & c)
{
  if (!c.cfg.ocp) missing_section("solve-parking", "ocp");
  const OcpSection & s = *c.cfg.ocp;
  const ocp::DiscreteOcp d = ocp::discretize(ocp::parking_problem(s.parking), discretization(s, 101));
  nlp::Options opt;
  opt.max_iterations = s.max_iterations;
  const ocp::OcpSolution sol = ocp::solve(d, opt);
  ocp::write_vehicle_csv(c.path("parking_traj.csv"), sol);
  c.report.add_file("parking_traj.csv");
  const std::vector<Obstacle> curb = ocp::parking_curb();
  write_outlines(c.path("curb.csv"), curb);
  c.report.add_file("curb.csv");
  record_solution(c, sol, "convergence.log");
  VehicleParams body;
  body.wheelbase = s.parking.wheelbase;
  body.width = s.parking.width;
  const ClearanceReport clear = trajectory_clear(ocp::timed_states(sol), body, curb, 1e-3);
  c.report.scalar("curb_clear", clear.clear ? 1.0 : 0.0);
  c.report.scalar("worst_zeta", clear.worst_zeta);
  return sol.ok() ? 0 : 1;
}

// Obstacle profile at the start and at the final time: t, x, y.
void write_avoidance_obstacle(const std::string & path, const ocp::OcpSolution & sol, const OcpSection & s)
{
  const ocp::AvoidanceSettings & a = s.avoidance;
  const double psi = a.psi_obs_deg * M_PI / 180.0;
  std::vector<std::vector<double>> rows;
  for (double t : {0.0, sol.tf}) {
    const double x0 = sol.q[0] + t * s.p[1] * a.v_obs * std::cos(psi);
    const double h = a.obstacle_height + t * s.p[1] * a.v_obs * std::sin(psi);
    for (int k = 0; k <= 80; ++k) {
      const double x = x0 - 2.0 + 0.1 * k;
      rows.push_back({t, x, ocp::ramp(x, x0, h)});
    }
  }
  csv::write(path, {"t", "x", "y"}, rows);
}

ocp::DiscreteOcp avoidance_at(const OcpSection & s, const Eigen::Vector2d & p)
{
  return ocp::discretize(ocp::avoidance_problem(p, s.avoidance), discretization(s, 51));
}

nlp::Options ocp_options(const OcpSection & s)
{
  nlp::Options opt;
  opt.max_iterations = s.max_iterations;
  return opt;
}

int solve_avoidance(Context & c)
{
  if (!c.cfg.ocp) missing_section("solve-avoidance", "ocp");
  const OcpSection & s = *c.cfg.ocp;
  const ocp::DiscreteOcp d = avoidance_at(s, s.p);
  const ocp::OcpSolution sol = ocp::solve(d, ocp_options(s));
  ocp::write_vehicle_csv(c.path("avoidance_traj.csv"), sol);
  c.report.add_file("avoidance_traj.csv");
  if (sol.q.size() > 0) {
    write_avoidance_obstacle(c.path("avoidance_obstacle.csv"), sol, s);
    c.report.add_file("avoidance_obstacle.csv");
    c.report.scalar("d", sol.q[0]);
  }
  record_solution(c, sol, "convergence.log");
  int braking = 0;
  for (int k = 0; k < sol.u.rows(); ++k) braking += std::abs(sol.u(k, 0) - d.ocp.u_lower[0]) <= 1e-4 ? 1 : 0;
  c.report.scalar("braking_share", sol.u.rows() ? static_cast<double>(braking) / sol.u.rows() : 0.0);
  return sol.ok() ? 0 : 1;
}

int sensitivity(Context & c)
{
  if (!c.cfg.ocp) missing_section("sensitivity", "ocp");
  const OcpSection & s = *c.cfg.ocp;
  const ocp::DiscreteOcp d = avoidance_at(s, s.p);
  const ocp::OcpSolution sol = ocp::solve(d, ocp_options(s));
  record_solution(c, sol, "convergence.log");
  if (!sol.ok()) return 1;
  const ocp::SensitivityData sens = ocp::sensitivities(d, sol);
  std::vector<std::vector<double>> rows;
  for (int j = 0; j < 2; ++j) rows.push_back({static_cast<double>(j + 1), sens.dtf[j], sens.dq(0, j)});
  csv::write(c.path("sensitivity.csv"), {"param", "dtf", "dd"}, rows);
  c.report.add_file("sensitivity.csv");
  c.report.scalar("d", sol.q[0]);
  c.report.scalar("dtf_dp1", sens.dtf[0]);
  c.report.scalar("dtf_dp2", sens.dtf[1]);
  c.report.scalar("dd_dp1", sens.dq(0, 0));
  c.report.scalar("dd_dp2", sens.dq(0, 1));

  // Warm re-solves next to the nominal point for comparison with the first-order prediction.
  nlp::Options warm = ocp_options(s);
  warm.mu_init = 1e-5;
  warm.bound_push = 1e-5;
  rows.clear();
  int failed = 0;
  for (double step : {-0.05, -0.025, 0.025, 0.05}) {
    const Eigen::Vector2d p = s.p + Eigen::Vector2d(step, 0.0);
    const ocp::OcpSolution pred = ocp::taylor_update(d, sol, sens, p);
    const ocp::DiscreteOcp dp = avoidance_at(s, p);
    const ocp::OcpSolution exact = ocp::solve(dp, ocp::resample(dp, sol), warm);
    failed += exact.ok() ? 0 : 1;
    rows.push_back({p[0], pred.q[0], exact.q[0], std::abs(pred.q[0] - exact.q[0]), pred.tf, exact.tf});
  }
  csv::write(c.path("taylor.csv"), {"p1", "d_taylor", "d_solved", "d_error", "tf_taylor", "tf_solved"}, rows);
  c.report.add_file("taylor.csv");
  return failed == 0 ? 0 : 1;
}

// Road region outline and obstacle ellipses: kind (0 region, 1 ellipse), index, x, y.
void write_road(const std::string & path, const fleet::Road & road)
{
  std::vector<std::vector<double>> rows;
  if (road.region) {
    Waypoints v;
    try {
      v = road.region->vertices();
    } catch (const Error &) {
    }
    if (!v.empty()) v.push_back(v.front());
    for (const auto & p : v) rows.push_back({0.0, 0.0, p.x(), p.y()});
  }
  for (std::size_t i = 0; i < road.obstacles.size(); ++i) {
    const Ellipse & e = road.obstacles[i];
    const double pw = road.obstacle_power;
    for (int k = 0; k <= 72; ++k) {
      // Level set |lon / rx|^p + |lat / ry|^p = 1.
      const double a = 2.0 * M_PI * k / 72.0;
      const double ca = std::cos(a), sa = std::sin(a);
      const double lon = e.rx * std::copysign(std::pow(std::abs(ca), 2.0 / pw), ca);
      const double lat = e.ry * std::copysign(std::pow(std::abs(sa), 2.0 / pw), sa);
      rows.push_back({1.0, static_cast<double>(i), e.center.x() + std::cos(e.psi) * lon - std::sin(e.psi) * lat,
                      e.center.y() + std::sin(e.psi) * lon + std::cos(e.psi) * lat});
    }
  }
  csv::write(path, {"kind", "index", "x", "y"}, rows);
}

int mpc(Context & c)
{
  if (!c.cfg.fleet) missing_section("mpc", "vehicles");
  fleet::World w(*c.cfg.fleet);
  while (!w.done()) {
    const std::size_t before = w.logs().size();
    w.round();
    if (c.flags.verbose) {
      for (std::size_t i = before; i < w.logs().size(); ++i) {
        const fleet::RoundLog & l = w.logs()[i];
        c.err << "round " << l.round << " vehicle " << l.vehicle << " " << l.status << " rank " << l.priority_rank
              << " ellipse " << csv::format(l.min_ellipse_value) << "\n";
      }
    }
  }
  const auto & vehicles = w.scenario().vehicles;
  int arrived = 0;
  int networked = 0;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const std::string name = "vehicle_" + std::to_string(vehicles[i].id) + ".csv";
    fleet::write_trajectory_csv(c.path(name), w.trajectories()[i]);
    c.report.add_file(name);
    if (!vehicles[i].external) {
      ++networked;
      arrived += w.arrived()[i] ? 1 : 0;
    }
  }
  fleet::write_round_log(c.path("round_log.csv"), w.logs());
  c.report.add_file("round_log.csv");
  write_road(c.path("road.csv"), w.scenario().road);
  c.report.add_file("road.csv");
  c.report.iterations = w.rounds();
  c.report.scalar("rounds", w.rounds());
  c.report.scalar("time", w.time());
  c.report.scalar("arrived", arrived);
  c.report.scalar("min_safety", w.min_safety());
  // Local solves that ended below full convergence; scripted vehicles never solve.
  int loose = 0;
  for (const fleet::RoundLog & l : w.logs()) loose += l.status == "converged" || l.status == "external" ? 0 : 1;
  c.report.scalar("unconverged_solves", loose);
  c.report.status = arrived == networked ? "arrived" : "incomplete";
  return arrived == networked ? 0 : 1;
}

int track(Context & c)
{
  if (!c.cfg.tracking) missing_section("track", "tracking");
  const TrackingSection & t = *c.cfg.tracking;
  const tracking::ReferenceTrack ref = tracking::ReferenceTrack::constant_speed(
    CubicSpline::interpolate(t.track.empty() ? tracking::demo_track() : t.track), t.speed);
  const tracking::ReferencePoint r0 = ref.at(0.0);
  VehicleState start;
  start.x = r0.pos.x();
  start.y = r0.pos.y();
  start.psi = std::atan2(r0.vel.y(), r0.vel.x());
  if (t.initial) {
    start.x = t.initial->x();
    start.y = t.initial->y();
    start.psi = t.initial->z();
  }
  start.v = r0.vel.norm();
  tracking::ClosedLoopOptions o = t.loop;
  if (o.duration <= 0.0) o.duration = ref.duration();
  if (o.noise) o.noise->seed = c.cfg.seed;
  const tracking::ClosedLoopResult r = tracking::closed_loop(ref, start, t.gains, o);
  tracking::write_tracking_csv(c.path("tracking.csv"), r);
  c.report.add_file("tracking.csv");
  write_spline_csv(ref.spline(), 400, c.path("reference.csv"));
  c.report.add_file("reference.csv");
  c.report.iterations = static_cast<int>(r.t.size());
  c.report.scalar("max_error", r.max_error());
  c.report.scalar("max_error_after_10s", r.max_error_after(10.0));
  c.report.scalar("final_error", r.error.empty() ? 0.0 : r.error.back());
  const tracking::StabilityReport st = tracking::stability_check(t.gains);
  c.report.scalar("linear_stable", st.applicable && st.stable ? 1.0 : 0.0);
  return 0;
}

void apply_flags(Config & cfg, const Flags & f)
{
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out_dir = *f.out;
  if (f.n) {
    if (*f.n < 2) throw Error(ErrorCode::InvalidArgument, "--n: need at least 2 grid points");
    if (cfg.ocp) cfg.ocp->n = *f.n;
    if (cfg.fleet) cfg.fleet->mpc.grid = *f.n;
  }
  if (f.method && cfg.ocp) cfg.ocp->method = *f.method == "euler" ? Integrator::Euler : Integrator::RK4;
  if (cfg.fleet) cfg.fleet->seed = cfg.seed;
  if (cfg.tracking && cfg.tracking->loop.noise) cfg.tracking->loop.noise->seed = cfg.seed;
}

// Fails before anything is written when the command's section is absent.
void require_section(const std::string & command, const Config & cfg)
{
  if (command == "plan-grid" && !cfg.grid) missing_section(command, "planner.grid");
  if (command == "plan-lattice" && !cfg.lattice) missing_section(command, "planner.lattice");
  if ((command == "solve-parking" || command == "solve-avoidance" || command == "sensitivity") && !cfg.ocp) {
    missing_section(command, "ocp");
  }
  if (command == "mpc" && !cfg.fleet) missing_section(command, "vehicles");
  if (command == "track" && !cfg.tracking) missing_section(command, "tracking");
}

int run_command(const std::string & command, Context & c)
{
  if (command == "plan-grid") return plan_grid(c);
  if (command == "plan-lattice") return plan_lattice(c);
  if (command == "solve-parking") return solve_parking(c);
  if (command == "solve-avoidance") return solve_avoidance(c);
  if (command == "sensitivity") return sensitivity(c);
  if (command == "mpc") return mpc(c);
  return track(c);
}

PolygonSpec box_spec(double x0, double y0, double x1, double y1)
{
  PolygonSpec p;
  p.vertices = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  return p;
}

}  // namespace

const std::vector<std::string> & scenario_commands()
{
  static const std::vector<std::string> names{"plan-grid", "plan-lattice", "solve-parking", "solve-avoidance",
                                              "sensitivity", "mpc", "track"};
  return names;
}

Config builtin_config(const std::string & command)
{
  Config c;
  if (command == "plan-grid") {
    c.name = "grid_empty";
    GridSection g;
    g.grid = GridConfig{0.0, 10.0, 0.0, 10.0, 10, 10};
    g.goal = {10.0, 10.0};
    c.grid = g;
  } else if (command == "plan-lattice") {
    c.name = "turn_corridor";
    c.obstacles = {box_spec(-30.0, -8.0, 10.0, -4.0), box_spec(4.0, -8.0, 8.0, 30.0), box_spec(-30.0, 4.0, -4.0, 30.0)};
    LatticeSection l;
    l.vehicle.wheelbase = 2.7;
    l.vehicle.width = 1.8;
    l.lattice.x_min = -25.0;
    l.lattice.x_max = 4.0;
    l.lattice.y_min = -4.0;
    l.lattice.y_max = 25.0;
    l.lattice.v_min = l.lattice.v_max = 5.0;
    l.lattice.n_v = 0;
    l.start = {-20.0, 0.0, 0.0};
    l.goal.position = {0.0, 20.0};
    l.goal.tolerance = 1.5;
    c.lattice = l;
  } else if (command == "solve-parking") {
    c.name = "parking";
    OcpSection s;
    s.n = 101;
    c.ocp = s;
  } else if (command == "solve-avoidance" || command == "sensitivity") {
    c.name = "avoidance";
    OcpSection s;
    s.n = 51;
    c.ocp = s;
  } else if (command == "mpc") {
    c.fleet = fleet::narrow_passage_scenario();
    c.name = c.fleet->name;
  } else if (command == "track") {
    c.name = "tracking";
    c.tracking = TrackingSection{};
  } else {
    throw Error(ErrorCode::InvalidArgument, "no builtin scenario for '" + command + "'");
  }
  return c;
}

int run_cli(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Trajectory planning, optimal control and fleet MPC for road vehicles", "roadplan"};
  app.require_subcommand(1);
  Flags f;
  std::string active;
  auto common = [&f](CLI::App * sub) {
    sub->add_option("--scenario", f.scenario, "Scenario file (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "Seed for every random draw");
    sub->add_option("--out", f.out, "Output directory");
    sub->add_option("--n", f.n, "Grid points of the discretization");
    sub->add_option("--method", f.method, "Integration scheme")->check(CLI::IsMember({"euler", "rk4"}));
    sub->add_flag("--verbose", f.verbose, "Solver progress on standard error");
    sub->add_flag("--dump-config", f.dump, "Print the effective scenario and exit");
  };
  const std::vector<std::pair<std::string, std::string>> help{
    {"plan-grid", "Geometric shortest path on an 8-connected grid"},
    {"plan-lattice", "Kinematic state lattice search and track smoothing"},
    {"solve-parking", "Backward parking into a lot"},
    {"solve-avoidance", "Evasive lane change with minimal obstacle distance"},
    {"sensitivity", "Parametric sensitivities and first-order updates of the avoidance problem"},
    {"mpc", "Distributed fleet model predictive control"},
    {"track", "Closed-loop flatness tracking of a reference track"}};
  for (const auto & [name, text] : help) common(app.add_subcommand(name, text));
  CLI::App * verify = app.add_subcommand("verify", "Run the acceptance checks");
  verify->add_option("--criterion", f.criteria, "Only these criteria (repeatable)")->check(CLI::Range(1, kCriteria));
  verify->add_flag("--verbose", f.verbose, "Unused; accepted for symmetry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError & e) {
    err << "ERROR InvalidArgument: " << e.what() << "\n";
    return 2;
  }
  for (CLI::App * sub : app.get_subcommands()) active = sub->get_name();

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (active == "verify") {
      const std::vector<CriterionResult> results = run_acceptance(f.criteria, &out);
      int failed = 0;
      for (const CriterionResult & r : results) failed += r.pass ? 0 : 1;
      out << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
      return failed == 0 ? 0 : 1;
    }
    Config cfg = f.scenario.empty() ? builtin_config(active) : load_config(f.scenario);
    apply_flags(cfg, f);
    if (f.dump) {
      out << dump_config(cfg);
      return 0;
    }
    require_section(active, cfg);
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + cfg.out_dir + ": " + ec.message());
    Context c{cfg, f, RunReport{}, out, err};
    c.report.command = active;
    c.report.out_dir = cfg.out_dir;
    c.report.status = "ok";
    c.report.exit_code = run_command(active, c);
    c.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.report.write();
    out << c.report.to_json();
    if (c.report.exit_code != 0) err << "ERROR SolverFailure: " << active << " finished with status " << c.report.status << "\n";
    return c.report.exit_code;
  } catch (const Error & e) {
    err << "ERROR " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception & e) {
    err << "ERROR SolverFailure: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace roadplan::app
