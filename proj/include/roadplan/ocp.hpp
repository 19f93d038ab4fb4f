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


#ifndef ROADPLAN__OCP_HPP_
#define ROADPLAN__OCP_HPP_

/**
 * @file
 * @brief Direct transcription of parametric optimal control problems.
 *
 * States and controls on an equidistant grid in normalized time become NLP
 * variables; the dynamics enter as one-step defects of an Euler or RK4 map
 * with piecewise-constant controls. A free final time is a scaling variable.
 * Parameters p are variables pinned by equality rows so that the KKT
 * sensitivity with respect to those rows is the derivative with respect to p.
 */

#include "roadplan/collision.hpp"
#include "roadplan/dynamics.hpp"
#include "roadplan/nlp.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace roadplan::ocp
{

using nlp::Jet2;
using nlp::kInf;

/// Model callbacks for one scalar type. q are free optimization parameters, p fixed ones.
template <class S>
struct OcpFunctions
{
  std::function<void(const S * z, const S * u, const S * q, const S * p, S * dz)> dynamics;
  /// Running cost; may be left empty.
  std::function<S(const S * z, const S * u, const S * q, const S * p)> lagrange;
  /// Path functions evaluated at every grid point, bounded by path_lower/path_upper.
  std::function<void(const S & t, const S * z, const S * q, const S * p, S * g)> path;
  /// Boundary residual, driven to zero.
  std::function<void(const S * z0, const S * zf, const S & tf, const S * q, const S * p, S * r)>
    boundary;
  std::function<S(const S * zf, const S & tf, const S * q, const S * p)> mayer;
};

struct OcpProblem
{
  int nz{0};
  int nu{0};
  int nq{0};
  int np{0};
  int n_path{0};
  int n_boundary{0};
  /// State bounds, applied from the second grid point on.
  std::vector<double> z_lower, z_upper;
  std::vector<double> u_lower, u_upper;
  std::vector<double> q_lower, q_upper;
  std::vector<double> path_lower, path_upper;
  /// When false, path functions are skipped at the first grid point.
  bool path_at_start{true};
  Eigen::VectorXd p;
  bool free_final_time{true};
  /// Final time when fixed, initial guess otherwise.
  double tf{1.0};
  double tf_min{0.01};
  /// Straight-line guess endpoints and parameter guess.
  Eigen::VectorXd guess_start, guess_end, q_guess;

  OcpFunctions<double> f;
  OcpFunctions<Jet2> j;

  /// Fills both callback sets from a model with templated members dynamics, lagrange, path,
  /// boundary and mayer.
  template <class M>
  void bind(const M & m)
  {
    bind_one(f, m);
    bind_one(j, m);
  }

  void validate() const;

private:
  template <class S, class M>
  static void bind_one(OcpFunctions<S> & out, const M & m)
  {
    out.dynamics = [m](const S * z, const S * u, const S * q, const S * p, S * dz) {
      m.dynamics(z, u, q, p, dz);
    };
    out.lagrange = [m](const S * z, const S * u, const S * q, const S * p) {
      return m.lagrange(z, u, q, p);
    };
    out.path = [m](const S & t, const S * z, const S * q, const S * p, S * g) {
      m.path(t, z, q, p, g);
    };
    out.boundary = [m](const S * z0, const S * zf, const S & tf, const S * q, const S * p, S * r) {
      m.boundary(z0, zf, tf, q, p, r);
    };
    out.mayer = [m](const S * zf, const S & tf, const S * q, const S * p) {
      return m.mayer(zf, tf, q, p);
    };
  }
};

struct Discretization
{
  int N{101};
  Integrator scheme{Integrator::RK4};
};

/// Index map of the transcribed problem: [z_0..z_{N-1} | u_0..u_{N-2} | sigma | q | p].
struct Layout
{
  int N{0};
  int nz{0};
  int nu{0};
  int nq{0};
  int np{0};
  bool free_final_time{true};

  int z(int k, int i) const { return k * nz + i; }
  int u(int k, int i) const { return N * nz + k * nu + i; }
  /// -1 for a fixed final time.
  int sigma() const { return free_final_time ? N * nz + (N - 1) * nu : -1; }
  int q(int i) const { return N * nz + (N - 1) * nu + (free_final_time ? 1 : 0) + i; }
  int p(int i) const { return q(nq) + i; }
  int size() const { return p(np); }
};

struct DiscreteOcp
{
  OcpProblem ocp;
  Discretization disc;
  Layout layout;
  nlp::Problem nlp;
  /// Equality rows pinning each parameter.
  std::vector<int> param_rows;
  /// First defect row of each interval.
  std::vector<int> defect_rows;

  Eigen::VectorXd initial_guess() const;
  /// Normalized grid times tau_k = k / (N - 1).
  double tau(int k) const { return static_cast<double>(k) / (disc.N - 1); }
};

DiscreteOcp discretize(const OcpProblem & problem, const Discretization & disc);

struct OcpSolution
{
  nlp::Status status{nlp::Status::NumericalFailure};
  Eigen::VectorXd t;
  /// N x nz states and (N - 1) x nu controls.
  Eigen::MatrixXd z;
  Eigen::MatrixXd u;
  double tf{0.0};
  Eigen::VectorXd q;
  double objective{0.0};
  double max_defect{0.0};
  double seconds{0.0};
  /// Raw NLP iterate including multipliers.
  nlp::Solution raw;

  bool ok() const { return status == nlp::Status::Converged; }
};

/// Maps an NLP vector to states, controls, final time and parameters.
OcpSolution unpack(const DiscreteOcp & d, const Eigen::VectorXd & x);

/// Warm start on the grid of d from a solution on any grid, by linear interpolation in tau.
Eigen::VectorXd resample(const DiscreteOcp & d, const OcpSolution & sol);

OcpSolution solve(const DiscreteOcp & d, const Eigen::VectorXd & x0, const nlp::Options & opt = {});
OcpSolution solve(const DiscreteOcp & d, const nlp::Options & opt = {});

struct SensitivityData
{
  /// One N x nz (resp. (N - 1) x nu) matrix per parameter.
  std::vector<Eigen::MatrixXd> dz;
  std::vector<Eigen::MatrixXd> du;
  /// d tf / d p_j and d q_i / d p_j.
  Eigen::VectorXd dtf;
  Eigen::MatrixXd dq;
  /// Derivative of the whole NLP vector, one column per parameter.
  Eigen::MatrixXd dx;
};

SensitivityData sensitivities(const DiscreteOcp & d, const OcpSolution & sol);

/// First-order prediction of the solution at parameter p.
OcpSolution taylor_update(
  const DiscreteOcp & d, const OcpSolution & sol, const SensitivityData & sens,
  const Eigen::VectorXd & p);

/// Parking lot depth profile: 0 outside |x| >= 2.5, -3 inside |x| <= 2.4, C1 cubic blend.
template <class S>
S eta(const S & x)
{
  using std::abs;
  const S ax = abs(x);
  if (ax >= 2.5) return S(0.0);
  if (ax <= 2.4) return S(-3.0);
  const S r = ax - 2.5;
  return -900.0 * r * r - 6000.0 * r * r * r;
}

/// Obstacle profile rising from 0 at x = d to h at x = d + 1 with C1 cubic pieces.
template <class S>
S ramp(const S & x, const S & d, const S & h)
{
  if (x < d) return S(0.0) * h;
  const S e = x - d;
  if (e < 0.5) return 4.0 * h * e * e * e;
  if (e < 1.0) {
    const S r = e - 1.0;
    return 4.0 * h * r * r * r + h;
  }
  return h;
}

struct ParkingSettings
{
  double wheelbase{2.7};
  double width{1.8};
  /// Lateral offset of the constrained wheel centers in units of width / 2 (+1 left, -1 right).
  double wheel_side{-1.0};
  double tf_guess{15.0};
};

/// Car parks backwards into a lot of depth 3 m; u = (a, w), z = (x, y, psi, v, delta).
OcpProblem parking_problem(const ParkingSettings & s = {});

/// Curb regions y < eta(x) as convex polygons, the blend split into narrow strips.
std::vector<Obstacle> parking_curb(int strips = 40);

struct AvoidanceSettings
{
  double wheelbase{2.7};
  double width{2.0};
  double road_width{8.0};
  double v0{27.78};
  double v_obs{100.0 / 3.6};
  double psi_obs_deg{170.0};
  double obstacle_height{3.5};
  double steer_weight{18.0};
  double tf_guess{1.5};
  double d_guess{20.0};
};

/// Minimal obstacle distance d (the single q parameter) for an evasive lane change at speed.
OcpProblem avoidance_problem(const Eigen::Vector2d & p, const AvoidanceSettings & s = {});

/// Vehicle states along the solution grid for collision post-checks.
std::vector<TimedState> timed_states(const OcpSolution & sol);

/// CSV with columns t,x,y,psi,v,delta,a,w; the last row repeats the final control.
void write_vehicle_csv(const std::string & path, const OcpSolution & sol);

/// Line-oriented convergence log.
std::string convergence_log(const OcpSolution & sol);

}  // namespace roadplan::ocp

#endif  // ROADPLAN__OCP_HPP_
