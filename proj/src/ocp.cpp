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


#include "roadplan/ocp.hpp"

#include "roadplan/csv.hpp"
#include "roadplan/error.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <sstream>
#include <type_traits>

namespace roadplan::ocp
{

namespace
{

template <class T>
const OcpFunctions<T> & functions(const OcpProblem & p)
{
  if constexpr (std::is_same_v<T, double>) {
    return p.f;
  } else {
    return p.j;
  }
}

void check_size(const std::vector<double> & v, int n, const char * what)
{
  if (static_cast<int>(v.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has the wrong length");
  }
}

}  // namespace

void OcpProblem::validate() const
{
  if (nz <= 0 || nu < 0 || nq < 0 || np < 0 || n_path < 0 || n_boundary < 0) {
    throw Error(ErrorCode::DimensionMismatch, "problem dimensions must be nonnegative");
  }
  check_size(z_lower, nz, "z_lower");
  check_size(z_upper, nz, "z_upper");
  check_size(u_lower, nu, "u_lower");
  check_size(u_upper, nu, "u_upper");
  check_size(q_lower, nq, "q_lower");
  check_size(q_upper, nq, "q_upper");
  check_size(path_lower, n_path, "path_lower");
  check_size(path_upper, n_path, "path_upper");
  if (p.size() != np || q_guess.size() != nq || guess_start.size() != nz ||
      guess_end.size() != nz) {
    throw Error(ErrorCode::DimensionMismatch, "parameter or guess vector has the wrong length");
  }
  for (int i = 0; i < nu; ++i) {
    if (!(u_lower[i] <= u_upper[i])) {
      throw Error(ErrorCode::InvalidArgument, "control box is empty");
    }
  }
  if (!f.dynamics || !j.dynamics) {
    throw Error(ErrorCode::InvalidArgument, "dynamics callback missing");
  }
  if (!(tf > 0.0)) throw Error(ErrorCode::InvalidArgument, "final time must be positive");
}

DiscreteOcp discretize(const OcpProblem & problem, const Discretization & disc)
{
  problem.validate();
  if (disc.N < 2) throw Error(ErrorCode::InvalidArgument, "need at least two grid points");

  DiscreteOcp d;
  d.ocp = problem;
  d.disc = disc;
  Layout & L = d.layout;
  L.N = disc.N;
  L.nz = problem.nz;
  L.nu = problem.nu;
  L.nq = problem.nq;
  L.np = problem.np;
  L.free_final_time = problem.free_final_time;

  const int N = L.N;
  const int nz = L.nz;
  const int nu = L.nu;
  const int nq = L.nq;
  const int np = L.np;
  const bool has_sigma = L.free_final_time;
  const int n_extra = (has_sigma ? 1 : 0) + nq + np;
  if (2 * nz + nu + n_extra > nlp::kMaxBlockInputs) {
    throw Error(ErrorCode::DimensionMismatch, "stage block exceeds the input limit");
  }

  nlp::Problem & P = d.nlp;
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < nz; ++i) {
      const bool first = k == 0;
      P.add_variable(first ? -kInf : problem.z_lower[i], first ? kInf : problem.z_upper[i]);
    }
  }
  for (int k = 0; k + 1 < N; ++k) {
    for (int i = 0; i < nu; ++i) P.add_variable(problem.u_lower[i], problem.u_upper[i]);
  }
  if (has_sigma) P.add_variable(problem.tf_min, kInf);
  for (int i = 0; i < nq; ++i) P.add_variable(problem.q_lower[i], problem.q_upper[i]);
  for (int i = 0; i < np; ++i) P.add_variable(-kInf, kInf);

  auto shared = std::make_shared<const OcpProblem>(problem);
  const double dtau = 1.0 / (N - 1);
  const double tf_fixed = problem.tf;
  const bool rk4 = disc.scheme == Integrator::RK4;
  const bool has_lagrange = static_cast<bool>(problem.f.lagrange);

  auto extra_vars = [&](std::vector<int> & vars) {
    if (has_sigma) vars.push_back(L.sigma());
    for (int i = 0; i < nq; ++i) vars.push_back(L.q(i));
    for (int i = 0; i < np; ++i) vars.push_back(L.p(i));
  };

  // Dynamics defects and running cost per interval.
  for (int k = 0; k + 1 < N; ++k) {
    std::vector<int> vars;
    for (int i = 0; i < nz; ++i) vars.push_back(L.z(k, i));
    for (int i = 0; i < nu; ++i) vars.push_back(L.u(k, i));
    for (int i = 0; i < nz; ++i) vars.push_back(L.z(k + 1, i));
    extra_vars(vars);
    std::vector<int> targets;
    d.defect_rows.push_back(P.num_constraints());
    for (int i = 0; i < nz; ++i) targets.push_back(P.add_constraint(0.0, 0.0));
    if (has_lagrange) targets.push_back(nlp::kObjective);
    auto fn = [shared, nz, nu, nq, has_sigma, dtau, tf_fixed, rk4, has_lagrange](
                const auto * in, auto * out) {
      using T = std::remove_cv_t<std::remove_pointer_t<decltype(in)>>;
      const OcpFunctions<T> & F = functions<T>(*shared);
      const T * z = in;
      const T * u = in + nz;
      const T * z1 = in + nz + nu;
      int o = 2 * nz + nu;
      const T h = has_sigma ? in[o++] * dtau : T(tf_fixed * dtau);
      const T * q = in + o;
      const T * p = in + o + nq;
      auto rhs = [&](const T * zs, T * dz) {
        F.dynamics(zs, u, q, p, dz);
        return has_lagrange ? F.lagrange(zs, u, q, p) : T(0.0);
      };
      std::array<T, nlp::kMaxBlockInputs> k1, k2, k3, k4, tmp;
      const T l1 = rhs(z, k1.data());
      T next_cost;
      std::array<T, nlp::kMaxBlockInputs> next;
      if (rk4) {
        for (int i = 0; i < nz; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
        const T l2 = rhs(tmp.data(), k2.data());
        for (int i = 0; i < nz; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
        const T l3 = rhs(tmp.data(), k3.data());
        for (int i = 0; i < nz; ++i) tmp[i] = z[i] + h * k3[i];
        const T l4 = rhs(tmp.data(), k4.data());
        for (int i = 0; i < nz; ++i) {
          next[i] = z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        next_cost = h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
      } else {
        for (int i = 0; i < nz; ++i) next[i] = z[i] + h * k1[i];
        next_cost = h * l1;
      }
      for (int i = 0; i < nz; ++i) out[i] = z1[i] - next[i];
      if (has_lagrange) out[nz] = next_cost;
    };
    P.add_block(std::move(vars), std::move(targets), nlp::make_block(fn));
  }

  // Path constraints at every grid point.
  if (problem.n_path > 0) {
    const int n_path = problem.n_path;
    for (int k = problem.path_at_start ? 0 : 1; k < N; ++k) {
      std::vector<int> vars;
      for (int i = 0; i < nz; ++i) vars.push_back(L.z(k, i));
      extra_vars(vars);
      std::vector<int> targets;
      for (int r = 0; r < n_path; ++r) {
        targets.push_back(P.add_constraint(problem.path_lower[r], problem.path_upper[r]));
      }
      const double tau = k * dtau;
      auto fn = [shared, nz, nq, has_sigma, tau, tf_fixed, n_path](const auto * in, auto * out) {
        using T = std::remove_cv_t<std::remove_pointer_t<decltype(in)>>;
        const OcpFunctions<T> & F = functions<T>(*shared);
        int o = nz;
        const T t = has_sigma ? in[o++] * tau : T(tf_fixed * tau);
        std::array<T, nlp::kMaxBlockInputs> g;
        F.path(t, in, in + o, in + o + nq, g.data());
        for (int r = 0; r < n_path; ++r) out[r] = g[r];
      };
      P.add_block(std::move(vars), std::move(targets), nlp::make_block(fn));
    }
  }

  // Boundary conditions and Mayer term.
  {
    std::vector<int> vars;
    for (int i = 0; i < nz; ++i) vars.push_back(L.z(0, i));
    for (int i = 0; i < nz; ++i) vars.push_back(L.z(N - 1, i));
    extra_vars(vars);
    std::vector<int> targets;
    for (int r = 0; r < problem.n_boundary; ++r) targets.push_back(P.add_constraint(0.0, 0.0));
    const bool has_mayer = static_cast<bool>(problem.f.mayer);
    if (has_mayer) targets.push_back(nlp::kObjective);
    const int nb = problem.n_boundary;
    auto fn = [shared, nz, nq, has_sigma, tf_fixed, nb, has_mayer](const auto * in, auto * out) {
      using T = std::remove_cv_t<std::remove_pointer_t<decltype(in)>>;
      const OcpFunctions<T> & F = functions<T>(*shared);
      int o = 2 * nz;
      const T tf = has_sigma ? in[o++] : T(tf_fixed);
      const T * q = in + o;
      const T * p = in + o + nq;
      if (nb > 0) F.boundary(in, in + nz, tf, q, p, out);
      if (has_mayer) out[nb] = F.mayer(in + nz, tf, q, p);
    };
    if (!targets.empty()) P.add_block(std::move(vars), std::move(targets), nlp::make_block(fn));
  }

  // Parameters pinned by equality rows.
  for (int i = 0; i < np; ++i) {
    const int row = P.add_constraint(problem.p[i], problem.p[i]);
    d.param_rows.push_back(row);
    P.add_block({L.p(i)}, {row}, nlp::make_block([](const auto * in, auto * out) {
      out[0] = in[0];
    }));
  }

  const Eigen::VectorXd x0 = d.initial_guess();
  P.x_guess.assign(x0.data(), x0.data() + x0.size());
  return d;
}

Eigen::VectorXd DiscreteOcp::initial_guess() const
{
  const Layout & L = layout;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(L.size());
  for (int k = 0; k < L.N; ++k) {
    const double s = tau(k);
    for (int i = 0; i < L.nz; ++i) {
      x[L.z(k, i)] = (1.0 - s) * ocp.guess_start[i] + s * ocp.guess_end[i];
    }
  }
  for (int k = 0; k + 1 < L.N; ++k) {
    for (int i = 0; i < L.nu; ++i) x[L.u(k, i)] = std::clamp(0.0, ocp.u_lower[i], ocp.u_upper[i]);
  }
  if (L.free_final_time) x[L.sigma()] = ocp.tf;
  for (int i = 0; i < L.nq; ++i) x[L.q(i)] = ocp.q_guess[i];
  for (int i = 0; i < L.np; ++i) x[L.p(i)] = ocp.p[i];
  return x;
}

Eigen::VectorXd resample(const DiscreteOcp & d, const OcpSolution & sol)
{
  const Layout & L = d.layout;
  const auto M = static_cast<int>(sol.z.rows());
  if (M < 2 || sol.z.cols() != L.nz || sol.u.cols() != L.nu || sol.q.size() != L.nq) {
    throw Error(ErrorCode::DimensionMismatch, "solution does not match the problem");
  }
  // Row-wise linear interpolation of samples placed at s_j = j / (rows - 1).
  auto lerp = [](const Eigen::MatrixXd & v, double s, int i) {
    const auto n = static_cast<int>(v.rows());
    if (n == 1) return v(0, i);
    const double pos = std::clamp(s, 0.0, 1.0) * (n - 1);
    const int j = std::min(static_cast<int>(pos), n - 2);
    const double a = pos - j;
    return (1.0 - a) * v(j, i) + a * v(j + 1, i);
  };
  Eigen::VectorXd x = d.initial_guess();
  for (int k = 0; k < L.N; ++k) {
    for (int i = 0; i < L.nz; ++i) x[L.z(k, i)] = lerp(sol.z, d.tau(k), i);
  }
  // Controls sit at interval midpoints.
  for (int k = 0; k + 1 < L.N; ++k) {
    const double mid = (k + 0.5) / (L.N - 1);
    const double s = (mid * (M - 1) - 0.5) / std::max(1, M - 2);
    for (int i = 0; i < L.nu; ++i) x[L.u(k, i)] = lerp(sol.u, s, i);
  }
  if (L.free_final_time) x[L.sigma()] = sol.tf;
  for (int i = 0; i < L.nq; ++i) x[L.q(i)] = sol.q[i];
  return x;
}

OcpSolution unpack(const DiscreteOcp & d, const Eigen::VectorXd & x)
{
  const Layout & L = d.layout;
  if (x.size() != L.size()) {
    throw Error(ErrorCode::DimensionMismatch, "vector does not match the discretization");
  }
  OcpSolution s;
  s.tf = L.free_final_time ? x[L.sigma()] : d.ocp.tf;
  s.t.resize(L.N);
  s.z.resize(L.N, L.nz);
  s.u.resize(L.N - 1, L.nu);
  for (int k = 0; k < L.N; ++k) {
    s.t[k] = s.tf * d.tau(k);
    for (int i = 0; i < L.nz; ++i) s.z(k, i) = x[L.z(k, i)];
  }
  for (int k = 0; k + 1 < L.N; ++k) {
    for (int i = 0; i < L.nu; ++i) s.u(k, i) = x[L.u(k, i)];
  }
  s.q.resize(L.nq);
  for (int i = 0; i < L.nq; ++i) s.q[i] = x[L.q(i)];
  s.objective = d.nlp.objective(x);
  const Eigen::VectorXd c = d.nlp.constraints(x);
  for (int row : d.defect_rows) {
    for (int i = 0; i < L.nz; ++i) s.max_defect = std::max(s.max_defect, std::abs(c[row + i]));
  }
  s.raw.x = x;
  return s;
}

OcpSolution solve(const DiscreteOcp & d, const Eigen::VectorXd & x0, const nlp::Options & opt)
{
  if (!x0.allFinite()) throw Error(ErrorCode::InvalidArgument, "initial guess is not finite");
  const auto start = std::chrono::steady_clock::now();
  nlp::Solution raw = nlp::solve(d.nlp, x0, opt);
  OcpSolution s = unpack(d, raw.x);
  s.status = raw.status;
  s.raw = std::move(raw);
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

OcpSolution solve(const DiscreteOcp & d, const nlp::Options & opt)
{
  return solve(d, d.initial_guess(), opt);
}

SensitivityData sensitivities(const DiscreteOcp & d, const OcpSolution & sol)
{
  const Layout & L = d.layout;
  if (!sol.ok()) throw Error(ErrorCode::SolverFailure, "sensitivities need a converged solution");
  const nlp::Sensitivity s = nlp::rhs_sensitivity(d.nlp, sol.raw, d.param_rows);
  SensitivityData out;
  out.dx = s.dx;
  out.dtf = Eigen::VectorXd::Zero(L.np);
  out.dq = Eigen::MatrixXd::Zero(L.nq, L.np);
  for (int j = 0; j < L.np; ++j) {
    Eigen::MatrixXd dz(L.N, L.nz);
    Eigen::MatrixXd du(L.N - 1, L.nu);
    for (int k = 0; k < L.N; ++k) {
      for (int i = 0; i < L.nz; ++i) dz(k, i) = s.dx(L.z(k, i), j);
    }
    for (int k = 0; k + 1 < L.N; ++k) {
      for (int i = 0; i < L.nu; ++i) du(k, i) = s.dx(L.u(k, i), j);
    }
    out.dz.push_back(dz);
    out.du.push_back(du);
    if (L.free_final_time) out.dtf[j] = s.dx(L.sigma(), j);
    for (int i = 0; i < L.nq; ++i) out.dq(i, j) = s.dx(L.q(i), j);
  }
  return out;
}

OcpSolution taylor_update(
  const DiscreteOcp & d, const OcpSolution & sol, const SensitivityData & sens,
  const Eigen::VectorXd & p)
{
  if (p.size() != d.layout.np) {
    throw Error(ErrorCode::DimensionMismatch, "parameter vector has the wrong length");
  }
  const Eigen::VectorXd x = sol.raw.x + sens.dx * (p - d.ocp.p);
  OcpSolution out = unpack(d, x);
  out.status = sol.status;
  return out;
}

namespace
{

struct ParkingModel
{
  ParkingSettings s;

  template <class S>
  void dynamics(const S * z, const S * u, const S *, const S *, S * dz) const
  {
    rate_controlled_rhs(z, u, s.wheelbase, dz);
  }
  template <class S>
  S lagrange(const S *, const S * u, const S *, const S *) const
  {
    return u[1] * u[1];
  }
  template <class S>
  void path(const S &, const S * z, const S *, const S *, S * g) const
  {
    using std::cos;
    using std::sin;
    const double o = s.wheel_side * 0.5 * s.width;
    const S c = cos(z[2]);
    const S sn = sin(z[2]);
    const S xr = z[0] - o * sn;
    const S yr = z[1] + o * c;
    const S xf = z[0] + s.wheelbase * c - o * sn;
    const S yf = z[1] + s.wheelbase * sn + o * c;
    g[0] = yr - eta(xr);
    g[1] = yf - eta(xf);
  }
  template <class S>
  void boundary(const S * z0, const S * zf, const S &, const S *, const S *, S * r) const
  {
    const double start[5] = {2.5, 1.5, 0.0, 0.0, 0.0};
    const double goal[5] = {-1.25, -1.5, 0.0, 0.0, 0.0};
    for (int i = 0; i < 5; ++i) {
      r[i] = z0[i] - start[i];
      r[5 + i] = zf[i] - goal[i];
    }
  }
  template <class S>
  S mayer(const S *, const S & tf, const S *, const S *) const
  {
    return tf;
  }
};

struct AvoidanceModel
{
  AvoidanceSettings s;

  template <class S>
  void obstacle(const S & t, const S * q, const S * p, S & x, S & y) const
  {
    const double psi = s.psi_obs_deg * std::numbers::pi / 180.0;
    x = q[0] + t * p[1] * (s.v_obs * std::cos(psi));
    y = s.obstacle_height + t * p[1] * (s.v_obs * std::sin(psi));
  }
  template <class S>
  void dynamics(const S * z, const S * u, const S *, const S *, S * dz) const
  {
    rate_controlled_rhs(z, u, s.wheelbase, dz);
  }
  template <class S>
  S lagrange(const S *, const S * u, const S *, const S *) const
  {
    return s.steer_weight * u[1] * u[1];
  }
  template <class S>
  void path(const S & t, const S * z, const S * q, const S * p, S * g) const
  {
    S xo, yo;
    obstacle(t, q, p, xo, yo);
    g[0] = z[1] - ramp(z[0], xo, yo) - 0.5 * s.width;
    g[1] = z[1];
  }
  template <class S>
  void boundary(const S * z0, const S * zf, const S & tf, const S * q, const S * p, S * r) const
  {
    r[0] = z0[0];
    r[1] = z0[1] - 1.75;
    r[2] = z0[2] - p[0];
    r[3] = z0[3] - s.v0;
    r[4] = z0[4];
    S xo, yo;
    obstacle(tf, q, p, xo, yo);
    r[5] = zf[0] - xo - 3.0;
    r[6] = zf[2];
    r[7] = zf[4];
  }
  template <class S>
  S mayer(const S *, const S &, const S * q, const S *) const
  {
    return S(0.0) + q[0];
  }
};

void vehicle_bounds(OcpProblem & o, double a_lo, double a_hi)
{
  o.nz = 5;
  o.nu = 2;
  o.z_lower = {-kInf, -kInf, -kInf, -kInf, -std::numbers::pi / 6.0};
  o.z_upper = {kInf, kInf, kInf, kInf, std::numbers::pi / 6.0};
  o.u_lower = {a_lo, -0.5};
  o.u_upper = {a_hi, 0.5};
}

}  // namespace

OcpProblem parking_problem(const ParkingSettings & s)
{
  OcpProblem o;
  vehicle_bounds(o, -0.5, 0.5);
  o.n_path = 2;
  o.path_lower = {0.0, 0.0};
  o.path_upper = {kInf, kInf};
  o.n_boundary = 10;
  o.tf = s.tf_guess;
  o.p.resize(0);
  o.q_guess.resize(0);
  o.guess_start.resize(5);
  o.guess_start << 2.5, 1.5, 0.0, 0.0, 0.0;
  o.guess_end.resize(5);
  o.guess_end << -1.25, -1.5, 0.0, 0.0, 0.0;
  o.bind(ParkingModel{s});
  return o;
}

std::vector<Obstacle> parking_curb(int strips)
{
  if (strips < 1) throw Error(ErrorCode::InvalidArgument, "need at least one strip");
  const double far = 20.0;
  const double floor = -10.0;
  auto box = [](double x0, double x1, double y0, double y1) {
    return ConvexPolyhedron::from_vertices({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
  };
  Obstacle curb;
  curb.parts.push_back(box(2.5, far, floor, 0.0));
  curb.parts.push_back(box(-far, -2.5, floor, 0.0));
  curb.parts.push_back(box(-2.4, 2.4, floor, -3.0));
  for (int side = -1; side <= 1; side += 2) {
    for (int i = 0; i < strips; ++i) {
      const double a = 2.4 + 0.1 * i / strips;
      const double b = 2.4 + 0.1 * (i + 1) / strips;
      const double xa = side * a;
      const double xb = side * b;
      curb.parts.push_back(ConvexPolyhedron::from_vertices(
        {{xa, floor}, {xb, floor}, {xb, eta(xb)}, {xa, eta(xa)}}));
    }
  }
  return {curb};
}

OcpProblem avoidance_problem(const Eigen::Vector2d & p, const AvoidanceSettings & s)
{
  OcpProblem o;
  vehicle_bounds(o, -10.0, 0.5);
  o.nq = 1;
  o.q_lower = {-kInf};
  o.q_upper = {kInf};
  o.q_guess = Eigen::VectorXd::Constant(1, s.d_guess);
  o.np = 2;
  o.p = p;
  o.n_path = 2;
  o.path_lower = {0.0, -kInf};
  o.path_upper = {kInf, s.road_width - 0.5 * s.width};
  o.n_boundary = 8;
  o.tf = s.tf_guess;
  o.guess_start.resize(5);
  o.guess_start << 0.0, 1.75, p[0], s.v0, 0.0;
  o.guess_end.resize(5);
  o.guess_end << s.d_guess + 3.0, 1.75, 0.0, s.v0, 0.0;
  o.bind(AvoidanceModel{s});
  return o;
}

std::vector<TimedState> timed_states(const OcpSolution & sol)
{
  if (sol.z.cols() != 5) throw Error(ErrorCode::DimensionMismatch, "expected five vehicle states");
  std::vector<TimedState> out;
  for (int k = 0; k < sol.z.rows(); ++k) {
    out.push_back({sol.t[k], {sol.z(k, 0), sol.z(k, 1), sol.z(k, 2), sol.z(k, 3), sol.z(k, 4)}});
  }
  return out;
}

void write_vehicle_csv(const std::string & path, const OcpSolution & sol)
{
  if (sol.z.cols() != 5 || sol.u.cols() != 2) {
    throw Error(ErrorCode::DimensionMismatch, "expected five states and two controls");
  }
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < sol.z.rows(); ++k) {
    const int ku = std::min<int>(k, static_cast<int>(sol.u.rows()) - 1);
    rows.push_back(
      {sol.t[k], sol.z(k, 0), sol.z(k, 1), sol.z(k, 2), sol.z(k, 3), sol.z(k, 4), sol.u(ku, 0),
       sol.u(ku, 1)});
  }
  csv::write(path, {"t", "x", "y", "psi", "v", "delta", "a", "w"}, rows);
}

std::string convergence_log(const OcpSolution & sol)
{
  std::ostringstream os;
  char line[200];
  for (const auto & it : sol.raw.log) {
    std::snprintf(
      line, sizeof line, "iter %d f %.10g stat %.3e feas %.3e comp %.3e mu %.3e step %.3e reg %.3e\n",
      it.iteration, it.objective, it.stationarity, it.feasibility, it.complementarity, it.mu,
      it.step, it.regularization);
    os << line;
  }
  std::snprintf(
    line, sizeof line, "status %s iterations %d objective %.10g\n",
    nlp::to_string(sol.status).c_str(), sol.raw.iterations, sol.objective);
  os << line;
  return os.str();
}

}  // namespace roadplan::ocp
