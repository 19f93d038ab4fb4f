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


#include "roadplan/nlp.hpp"

#include "roadplan/error.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseQR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>

namespace roadplan::nlp
{

int Problem::add_variable(double lower, double upper, double guess)
{
  if (lower > upper) {
    throw Error(ErrorCode::InvalidArgument, "variable bounds are crossed");
  }
  x_lower.push_back(lower);
  x_upper.push_back(upper);
  x_guess.push_back(guess);
  return static_cast<int>(x_lower.size()) - 1;
}

int Problem::add_constraint(double lower, double upper)
{
  if (lower > upper) {
    throw Error(ErrorCode::InvalidArgument, "constraint bounds are crossed");
  }
  c_lower.push_back(lower);
  c_upper.push_back(upper);
  return static_cast<int>(c_lower.size()) - 1;
}

void Problem::add_block(
  std::vector<int> vars, std::vector<int> targets, std::shared_ptr<BlockFunction> fn)
{
  if (vars.size() > static_cast<std::size_t>(kMaxBlockInputs)) {
    throw Error(ErrorCode::DimensionMismatch, "block has too many inputs");
  }
  for (int v : vars) {
    if (v < 0 || v >= num_variables()) {
      throw Error(ErrorCode::DimensionMismatch, "block refers to an unknown variable");
    }
  }
  for (int t : targets) {
    if (t != kObjective && (t < 0 || t >= num_constraints())) {
      throw Error(ErrorCode::DimensionMismatch, "block refers to an unknown constraint row");
    }
  }
  blocks.push_back(Block{std::move(vars), std::move(targets), std::move(fn)});
}

double Problem::objective(const Eigen::VectorXd & x) const
{
  double f = 0.0;
  double in[kMaxBlockInputs];
  std::vector<double> out;
  for (const auto & b : blocks) {
    for (std::size_t i = 0; i < b.vars.size(); ++i) in[i] = x[b.vars[i]];
    out.assign(b.targets.size(), 0.0);
    bool any = false;
    for (int t : b.targets) any = any || t == kObjective;
    if (!any) continue;
    b.fn->eval(in, out.data());
    for (std::size_t k = 0; k < b.targets.size(); ++k) {
      if (b.targets[k] == kObjective) f += out[k];
    }
  }
  return f;
}

Eigen::VectorXd Problem::constraints(const Eigen::VectorXd & x) const
{
  Eigen::VectorXd c = Eigen::VectorXd::Zero(num_constraints());
  double in[kMaxBlockInputs];
  std::vector<double> out;
  for (const auto & b : blocks) {
    bool any = false;
    for (int t : b.targets) any = any || t != kObjective;
    if (!any) continue;
    for (std::size_t i = 0; i < b.vars.size(); ++i) in[i] = x[b.vars[i]];
    out.assign(b.targets.size(), 0.0);
    b.fn->eval(in, out.data());
    for (std::size_t k = 0; k < b.targets.size(); ++k) {
      if (b.targets[k] != kObjective) c[b.targets[k]] += out[k];
    }
  }
  return c;
}

void Problem::derivatives(
  const Eigen::VectorXd & x, const Eigen::VectorXd * y, double obj_factor, double & f,
  Eigen::VectorXd & grad, Eigen::VectorXd & c, Eigen::SparseMatrix<double> & jac,
  Eigen::SparseMatrix<double> * hess) const
{
  const int n = num_variables();
  const int m = num_constraints();
  f = 0.0;
  grad = Eigen::VectorXd::Zero(n);
  c = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::Triplet<double>> jt;
  std::vector<Eigen::Triplet<double>> ht;
  Jet2 in[kMaxBlockInputs];
  std::vector<Jet2> out;
  for (const auto & b : blocks) {
    const int k = static_cast<int>(b.vars.size());
    for (int i = 0; i < k; ++i) {
      Jet2 v;
      v.a.a = x[b.vars[i]];
      v.a.d[i] = 1.0;
      v.d[i].a = 1.0;
      in[i] = v;
    }
    out.assign(b.targets.size(), Jet2());
    b.fn->eval(in, out.data());
    for (std::size_t o = 0; o < b.targets.size(); ++o) {
      const Jet2 & r = out[o];
      const int t = b.targets[o];
      double weight = obj_factor;
      if (t == kObjective) {
        f += r.a.a;
        for (int i = 0; i < k; ++i) grad[b.vars[i]] += r.a.d[i];
      } else {
        c[t] += r.a.a;
        for (int i = 0; i < k; ++i) {
          if (r.a.d[i] != 0.0) jt.emplace_back(t, b.vars[i], r.a.d[i]);
        }
        weight = y ? (*y)[t] : 0.0;
      }
      if (hess && weight != 0.0) {
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) {
            const double h = r.d[i].d[j];
            if (h != 0.0) ht.emplace_back(b.vars[i], b.vars[j], weight * h);
          }
        }
      }
    }
  }
  jac.resize(m, n);
  jac.setFromTriplets(jt.begin(), jt.end());
  if (hess) {
    hess->resize(n, n);
    hess->setFromTriplets(ht.begin(), ht.end());
  }
}

std::string to_string(Status status)
{
  switch (status) {
    case Status::Converged:
      return "converged";
    case Status::MaxIterations:
      return "max_iterations";
    case Status::LineSearchFailure:
      return "line_search_failure";
    case Status::NumericalFailure:
      return "numerical_failure";
    case Status::TimeLimit:
      return "time_limit";
    case Status::Acceptable:
      return "acceptable";
  }
  return "unknown";
}

namespace
{

// A bound pair is weakly active when neither the multiplier nor the slack dominates. At an
// interior point solution both sit near sqrt(mu) in that case, so tiny comparable values count.
bool weakly_active(double mult, double dist, double tol)
{
  const double hi = std::max(mult, dist);
  const double lo = std::min(mult, dist);
  return hi < tol || (hi < std::sqrt(tol) && lo > 0.1 * hi);
}

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Problem in the slack form used by the interior point iteration: X = [x; s], C(X) = 0.
struct SlackForm
{
  const Problem & p;
  int n{0};
  int m{0};
  int ns{0};
  std::vector<int> slack_of_row;
  std::vector<int> row_of_slack;
  Eigen::VectorXd lo, hi;
  std::vector<bool> fixed;
  std::vector<bool> has_lo, has_hi;

  explicit SlackForm(const Problem & prob) : p(prob)
  {
    n = p.num_variables();
    m = p.num_constraints();
    slack_of_row.assign(static_cast<std::size_t>(m), -1);
    for (int r = 0; r < m; ++r) {
      if (p.c_lower[r] != p.c_upper[r]) {
        slack_of_row[r] = ns++;
        row_of_slack.push_back(r);
      }
    }
    lo.resize(n + ns);
    hi.resize(n + ns);
    for (int i = 0; i < n; ++i) {
      lo[i] = p.x_lower[i];
      hi[i] = p.x_upper[i];
    }
    for (int k = 0; k < ns; ++k) {
      lo[n + k] = p.c_lower[row_of_slack[k]];
      hi[n + k] = p.c_upper[row_of_slack[k]];
    }
    fixed.assign(static_cast<std::size_t>(n + ns), false);
    has_lo.assign(static_cast<std::size_t>(n + ns), false);
    has_hi.assign(static_cast<std::size_t>(n + ns), false);
    for (int i = 0; i < n + ns; ++i) {
      fixed[i] = lo[i] == hi[i];
      has_lo[i] = !fixed[i] && std::isfinite(lo[i]);
      has_hi[i] = !fixed[i] && std::isfinite(hi[i]);
    }
  }

  int size() const { return n + ns; }

  Eigen::VectorXd residual(const Eigen::VectorXd & X, const Eigen::VectorXd & cx) const
  {
    Eigen::VectorXd C(m);
    for (int r = 0; r < m; ++r) {
      const int k = slack_of_row[r];
      C[r] = cx[r] - (k < 0 ? p.c_lower[r] : X[n + k]);
    }
    return C;
  }

  double barrier(const Eigen::VectorXd & X, double f, double mu) const
  {
    double phi = f;
    for (int i = 0; i < size(); ++i) {
      if (has_lo[i]) phi -= mu * std::log(X[i] - lo[i]);
      if (has_hi[i]) phi -= mu * std::log(hi[i] - X[i]);
    }
    return phi;
  }
};

double inf_norm(const Eigen::VectorXd & v)
{
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

namespace
{

/// Hides the objective outputs of a block; used to build the restoration problem.
class DropOutputs : public BlockFunction
{
public:
  DropOutputs(std::shared_ptr<BlockFunction> inner, std::vector<int> keep, int n_out)
  : inner_(std::move(inner)), keep_(std::move(keep)), n_out_(n_out)
  {
  }
  void eval(const double * in, double * out) const override { run(in, out); }
  void eval(const Jet2 * in, Jet2 * out) const override { run(in, out); }

private:
  template <class T>
  void run(const T * in, T * out) const
  {
    std::vector<T> buf(static_cast<std::size_t>(n_out_));
    inner_->eval(in, buf.data());
    for (std::size_t k = 0; k < keep_.size(); ++k) out[k] = buf[keep_[k]];
  }
  std::shared_ptr<BlockFunction> inner_;
  std::vector<int> keep_;
  int n_out_;
};

/// Hooks used by the restoration phase to stop its inner solve early.
struct RunControl
{
  bool allow_restoration{true};
  std::function<bool(const Eigen::VectorXd &)> stop;
};

Solution run_ipm(
  const Problem & problem, const Eigen::VectorXd & x0, const Options & opt,
  const RunControl & control);

/**
 * Feasibility restoration: minimizes rho * ||c(x) - s||_1 plus a proximity term from the
 * current point, written with elastic variables p, n >= 0. Returns true when the inner solve
 * reaches a point that the caller accepts.
 */
bool restore(
  const Problem & problem, const Eigen::VectorXd & x, const Eigen::VectorXd & C, double mu,
  const Options & opt, const std::function<bool(const Eigen::VectorXd &)> & accept,
  Eigen::VectorXd & x_out)
{
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  const double rho = 1000.0;
  const double zeta = std::sqrt(mu);
  Problem R;
  for (int i = 0; i < n; ++i) R.add_variable(problem.x_lower[i], problem.x_upper[i]);
  for (int r = 0; r < m; ++r) R.add_constraint(problem.c_lower[r], problem.c_upper[r]);
  for (const auto & b : problem.blocks) {
    std::vector<int> keep;
    std::vector<int> targets;
    for (std::size_t k = 0; k < b.targets.size(); ++k) {
      if (b.targets[k] != kObjective) {
        keep.push_back(static_cast<int>(k));
        targets.push_back(b.targets[k]);
      }
    }
    if (targets.empty()) continue;
    if (targets.size() == b.targets.size()) {
      R.blocks.push_back(b);
    } else {
      R.blocks.push_back(Block{
        b.vars, targets,
        std::make_shared<DropOutputs>(b.fn, keep, static_cast<int>(b.targets.size()))});
    }
  }
  Eigen::VectorXd z0(n + 2 * m);
  z0.head(n) = x;
  for (int r = 0; r < m; ++r) {
    const int p = R.add_variable(0.0, kInf);
    const int q = R.add_variable(0.0, kInf);
    R.add_block({p, q}, {r, kObjective}, make_block([rho](const auto * in, auto * out) {
      out[0] = in[1] - in[0];
      out[1] = rho * (in[0] + in[1]);
    }));
    // Closed-form minimizer of the elastic barrier subproblem for the current residual.
    const double c = C[r];
    const double a = (mu - rho * c) / (2.0 * rho);
    const double nn = a + std::sqrt(a * a + mu * c / (2.0 * rho));
    z0[n + 2 * r] = c + nn;
    z0[n + 2 * r + 1] = nn;
  }
  for (int i = 0; i < n; ++i) {
    if (problem.x_lower[i] == problem.x_upper[i]) continue;
    const double w = 0.5 * zeta * std::pow(std::min(1.0, 1.0 / std::max(std::abs(x[i]), 1e-12)), 2);
    const double ref = x[i];
    R.add_block({i}, {kObjective}, make_block([w, ref](const auto * in, auto * out) {
      out[0] = w * (in[0] - ref) * (in[0] - ref);
    }));
  }
  Options ro = opt;
  ro.mu_init = std::max(mu, C.size() ? C.lpNorm<Eigen::Infinity>() : 0.0);
  ro.max_iterations = std::max(100, opt.max_iterations / 2);
  ro.acceptable_stationarity = 0.0;
  RunControl rc;
  rc.allow_restoration = false;
  bool accepted = false;
  rc.stop = [&](const Eigen::VectorXd & v) {
    if (accept(v.head(n))) {
      accepted = true;
      x_out = v.head(n);
      return true;
    }
    return false;
  };
  if (opt.verbose) std::fprintf(stderr, "restoration phase\n");
  const Solution rs = run_ipm(R, z0, ro, rc);
  if (!accepted && rs.ok()) {
    // Converged restoration without acceptance: a point of (local) minimal infeasibility.
    x_out = rs.x.head(n);
    accepted = accept(x_out);
  }
  return accepted;
}

Solution run_ipm(
  const Problem & problem, const Eigen::VectorXd & x0, const Options & opt,
  const RunControl & control)
{
  const auto t_start = std::chrono::steady_clock::now();
  const SlackForm sf(problem);
  const int n = sf.n;
  const int m = sf.m;
  const int N = sf.size();
  if (x0.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "initial guess has wrong size");
  }

  // Points are pushed into the interior of the bounds.
  auto push = [&](double v, int i) {
    if (sf.fixed[i]) return sf.lo[i];
    const double l = sf.lo[i];
    const double u = sf.hi[i];
    if (sf.has_lo[i] && sf.has_hi[i]) {
      const double pl = std::min(opt.bound_push * std::max(1.0, std::abs(l)), 0.5 * (u - l) * 0.99);
      const double pu = std::min(opt.bound_push * std::max(1.0, std::abs(u)), 0.5 * (u - l) * 0.99);
      return std::clamp(v, l + pl, u - pu);
    }
    if (sf.has_lo[i]) return std::max(v, l + opt.bound_push * std::max(1.0, std::abs(l)));
    if (sf.has_hi[i]) return std::min(v, u - opt.bound_push * std::max(1.0, std::abs(u)));
    return v;
  };
  auto primal_point = [&](const Eigen::VectorXd & x) {
    Eigen::VectorXd V(N);
    for (int i = 0; i < n; ++i) V[i] = push(x[i], i);
    const Eigen::VectorXd cv = problem.constraints(V.head(n));
    for (int k = 0; k < sf.ns; ++k) V[n + k] = push(cv[sf.row_of_slack[k]], n + k);
    return V;
  };
  Eigen::VectorXd X = primal_point(x0);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd zl = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd zu = Eigen::VectorXd::Zero(N);
  for (int i = 0; i < N; ++i) {
    if (sf.has_lo[i]) zl[i] = 1.0;
    if (sf.has_hi[i]) zu[i] = 1.0;
  }

  double mu = opt.mu_init;
  double theta_max = 0.0;
  double theta_min = 0.0;
  double filter_mu = -1.0;
  std::vector<std::pair<double, double>> filter;
  double delta_w_last = 0.0;
  bool estimate_y = true;
  Solution sol;
  sol.status = Status::MaxIterations;

  double f = 0.0;
  Eigen::VectorXd grad, cx;
  SpMat jac, hess;

  auto slack_dist = [&](const Eigen::VectorXd & V, int i, bool lower) {
    return lower ? V[i] - sf.lo[i] : sf.hi[i] - V[i];
  };

  // Jacobian of C(X) = c(x) - [rhs or s] with respect to X.
  auto residual_jacobian = [&]() {
    Triplets jt;
    for (int k = 0; k < jac.outerSize(); ++k) {
      for (SpMat::InnerIterator it(jac, k); it; ++it) {
        if (!sf.fixed[it.col()]) jt.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (int k = 0; k < sf.ns; ++k) jt.emplace_back(sf.row_of_slack[k], n + k, -1.0);
    return jt;
  };

  // Least-squares multipliers for the current point; dropped when they come out huge.
  auto least_squares_y = [&]() {
    const Triplets jt = residual_jacobian();
    Triplets t;
    for (int i = 0; i < N; ++i) t.emplace_back(i, i, 1.0);
    for (const auto & e : jt) {
      t.emplace_back(N + e.row(), e.col(), e.value());
      t.emplace_back(e.col(), N + e.row(), e.value());
    }
    for (int r = 0; r < m; ++r) t.emplace_back(N + r, N + r, -1e-8);
    SpMat M(N + m, N + m);
    M.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + m);
    rhs.head(n) = -grad;
    rhs.head(N) += zl - zu;
    for (int i = 0; i < N; ++i) {
      if (sf.fixed[i]) rhs[i] = 0.0;
    }
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ls(M);
    Eigen::VectorXd v = ls.info() == Eigen::Success ? Eigen::VectorXd(ls.solve(rhs))
                                                    : Eigen::VectorXd::Zero(N + m);
    const Eigen::VectorXd ynew = v.tail(m);
    return ynew.allFinite() && inf_norm(ynew) <= 1e3 ? ynew : Eigen::VectorXd::Zero(m);
  };

  auto errors = [&](double mu_target, double & stat, double & feas, double & comp) {
    Eigen::VectorXd gL = Eigen::VectorXd::Zero(N);
    gL.head(n) = grad + jac.transpose() * y;
    for (int k = 0; k < sf.ns; ++k) gL[n + k] = -y[sf.row_of_slack[k]];
    gL -= zl;
    gL += zu;
    for (int i = 0; i < N; ++i) {
      if (sf.fixed[i]) gL[i] = 0.0;
    }
    const double zsum = zl.lpNorm<1>() + zu.lpNorm<1>();
    const double s_d = std::max(100.0, (y.lpNorm<1>() + zsum) / std::max(1, m + N)) / 100.0;
    const double s_c = std::max(100.0, zsum / std::max(1, N)) / 100.0;
    stat = inf_norm(gL) / s_d;
    feas = inf_norm(sf.residual(X, cx));
    comp = 0.0;
    for (int i = 0; i < N; ++i) {
      if (sf.has_lo[i]) comp = std::max(comp, std::abs(zl[i] * slack_dist(X, i, true) - mu_target));
      if (sf.has_hi[i]) comp = std::max(comp, std::abs(zu[i] * slack_dist(X, i, false) - mu_target));
    }
    comp /= s_c;
  };

  auto measure = [&](const Eigen::VectorXd & V, double & theta, double & phi) {
    const double fv = problem.objective(V.head(n));
    theta = sf.residual(V, problem.constraints(V.head(n))).lpNorm<1>();
    phi = sf.barrier(V, fv, mu);
    return std::isfinite(phi) && std::isfinite(theta);
  };
  auto in_filter = [&](double theta, double phi) {
    for (const auto & [ft, fp] : filter) {
      if (theta >= ft && phi >= fp) return true;
    }
    return false;
  };

  auto reset_bound_multipliers = [&]() {
    for (int i = 0; i < N; ++i) {
      if (sf.has_lo[i]) zl[i] = mu / slack_dist(X, i, true);
      if (sf.has_hi[i]) zu[i] = mu / slack_dist(X, i, false);
    }
  };

  // Last iterate within the acceptable tolerances.
  const bool use_acceptable = opt.acceptable_stationarity > 0.0 && opt.acceptable_feasibility > 0.0 &&
                              opt.acceptable_complementarity > 0.0;
  struct Snapshot
  {
    Eigen::VectorXd X, y, zl, zu;
    double stat, feas, comp;
    int iter;
  };
  std::optional<Snapshot> acceptable_point;

  const double kappa_eps = 10.0;
  const double tol_mu = std::min(opt.tol_complementarity, opt.tol_stationarity) / 10.0;
  const double gamma_theta = 1e-5;
  const double gamma_phi = 1e-8;

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    problem.derivatives(X.head(n), &y, 1.0, f, grad, cx, jac, &hess);
    if (!std::isfinite(f) || !grad.allFinite() || !cx.allFinite()) {
      sol.status = Status::NumericalFailure;
      break;
    }
    if (estimate_y) {
      estimate_y = false;
      y = least_squares_y();
      problem.derivatives(X.head(n), &y, 1.0, f, grad, cx, jac, &hess);
    }
    double stat, feas, comp;
    errors(0.0, stat, feas, comp);
    sol.iterations = iter;
    sol.stationarity = stat;
    sol.feasibility = feas;
    sol.complementarity = comp;
    if (stat <= opt.tol_stationarity && feas <= opt.tol_feasibility &&
        comp <= opt.tol_complementarity) {
      sol.status = Status::Converged;
      break;
    }
    if (use_acceptable && stat <= opt.acceptable_stationarity && feas <= opt.acceptable_feasibility &&
        comp <= opt.acceptable_complementarity) {
      acceptable_point = Snapshot{X, y, zl, zu, stat, feas, comp, iter};
    }
    if (iter > 0 && control.stop && control.stop(X.head(n))) {
      sol.status = Status::Converged;
      break;
    }
    if (iter == opt.max_iterations) {
      sol.status = Status::MaxIterations;
      break;
    }
    if (opt.time_limit > 0.0) {
      const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      if (elapsed > opt.time_limit) {
        sol.status = Status::TimeLimit;
        break;
      }
    }
    // Barrier parameter update.
    for (;;) {
      double s_mu, f_mu, c_mu;
      errors(mu, s_mu, f_mu, c_mu);
      if (std::max({s_mu, f_mu, c_mu}) > kappa_eps * mu || mu <= tol_mu) break;
      mu = std::max(tol_mu, std::min(0.2 * mu, std::pow(mu, 1.5)));
    }
    const double tau = std::max(0.99, 1.0 - mu);

    // Barrier gradient and primal-dual diagonal.
    Eigen::VectorXd sigma = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd gphi = Eigen::VectorXd::Zero(N);
    gphi.head(n) = grad;
    for (int i = 0; i < N; ++i) {
      if (sf.has_lo[i]) {
        const double d = slack_dist(X, i, true);
        sigma[i] += zl[i] / d;
        gphi[i] -= mu / d;
      }
      if (sf.has_hi[i]) {
        const double d = slack_dist(X, i, false);
        sigma[i] += zu[i] / d;
        gphi[i] += mu / d;
      }
    }
    for (int i = 0; i < N; ++i) {
      if (sf.fixed[i]) gphi[i] = 0.0;
    }
    const Eigen::VectorXd C = sf.residual(X, cx);
    Eigen::VectorXd rx = gphi;
    rx.head(n) += jac.transpose() * y;
    for (int k = 0; k < sf.ns; ++k) rx[n + k] -= y[sf.row_of_slack[k]];

    const Triplets jt = residual_jacobian();
    auto build = [&](double dw, double dc) {
      Triplets t;
      t.reserve(jt.size() * 2 + static_cast<std::size_t>(hess.nonZeros()) + N + m);
      for (int k = 0; k < hess.outerSize(); ++k) {
        for (SpMat::InnerIterator it(hess, k); it; ++it) {
          if (!sf.fixed[it.row()] && !sf.fixed[it.col()]) {
            t.emplace_back(it.row(), it.col(), it.value());
          }
        }
      }
      for (int i = 0; i < N; ++i) t.emplace_back(i, i, sf.fixed[i] ? 1.0 : sigma[i] + dw);
      for (const auto & e : jt) {
        t.emplace_back(N + e.row(), e.col(), e.value());
        t.emplace_back(e.col(), N + e.row(), e.value());
      }
      for (int r = 0; r < m; ++r) t.emplace_back(N + r, N + r, -dc);
      SpMat K(N + m, N + m);
      K.setFromTriplets(t.begin(), t.end());
      return K;
    };

    Eigen::VectorXd rhs(N + m);
    rhs.head(N) = -rx;
    rhs.tail(m) = -C;
    for (int i = 0; i < N; ++i) {
      if (sf.fixed[i]) rhs[i] = 0.0;
    }

    // Regularized LDL' factorization; the matrix is quasi-definite once the primal block is
    // positive definite, so the pivot signs give the inertia. dw grows until there are N
    // positive and m negative pivots.
    const double dc = 1e-9;
    double dw = 0.0;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    SpMat K;
    bool factored = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      K = build(dw, dc);
      if (attempt == 0) ldlt.analyzePattern(K);
      ldlt.factorize(K);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd D = ldlt.vectorD();
        int pos = 0;
        int neg = 0;
        for (Eigen::Index i = 0; i < D.size(); ++i) {
          if (D[i] > 0.0) ++pos;
          if (D[i] < 0.0) ++neg;
        }
        if (pos == N && neg == m && D.allFinite()) {
          factored = true;
          break;
        }
      }
      if (dw == 0.0) {
        dw = delta_w_last == 0.0 ? 1e-4 : std::max(1e-20, delta_w_last / 3.0);
      } else {
        dw *= delta_w_last == 0.0 ? 100.0 : 8.0;
      }
      if (dw > 1e40) break;
    }
    if (!factored) {
      sol.status = Status::NumericalFailure;
      break;
    }
    if (dw > 0.0) delta_w_last = dw;
    // Iterative refinement against the matrix without the dual regularization.
    const SpMat K0 = build(dw, 0.0);
    auto kkt_solve = [&](const Eigen::VectorXd & r) {
      Eigen::VectorXd v = ldlt.solve(r);
      for (int it = 0; it < 3; ++it) {
        const Eigen::VectorXd res = r - K0 * v;
        if (res.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + r.lpNorm<Eigen::Infinity>())) break;
        v += ldlt.solve(res);
      }
      return v;
    };
    const Eigen::VectorXd sol_step = kkt_solve(rhs);
    if (!sol_step.allFinite()) {
      sol.status = Status::NumericalFailure;
      break;
    }

    Eigen::VectorXd dX = sol_step.head(N);
    Eigen::VectorXd dy = sol_step.tail(m);
    for (int i = 0; i < N; ++i) {
      if (sf.fixed[i]) dX[i] = 0.0;
    }

    auto max_step = [&](const Eigen::VectorXd & V, const Eigen::VectorXd & dV) {
      double a = 1.0;
      for (int i = 0; i < N; ++i) {
        if (sf.has_lo[i] && dV[i] < 0.0) a = std::min(a, -tau * (V[i] - sf.lo[i]) / dV[i]);
        if (sf.has_hi[i] && dV[i] > 0.0) a = std::min(a, tau * (sf.hi[i] - V[i]) / dV[i]);
      }
      return a;
    };
    const double alpha_max = max_step(X, dX);

    Eigen::VectorXd dzl = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd dzu = Eigen::VectorXd::Zero(N);
    for (int i = 0; i < N; ++i) {
      if (sf.has_lo[i]) {
        const double d = slack_dist(X, i, true);
        dzl[i] = mu / d - zl[i] - zl[i] / d * dX[i];
      }
      if (sf.has_hi[i]) {
        const double d = slack_dist(X, i, false);
        dzu[i] = mu / d - zu[i] + zu[i] / d * dX[i];
      }
    }
    double alpha_z = 1.0;
    for (int i = 0; i < N; ++i) {
      if (sf.has_lo[i] && dzl[i] < 0.0) alpha_z = std::min(alpha_z, -tau * zl[i] / dzl[i]);
      if (sf.has_hi[i] && dzu[i] < 0.0) alpha_z = std::min(alpha_z, -tau * zu[i] / dzu[i]);
    }

    // Filter line search on (constraint violation, barrier objective) with second-order
    // corrections.
    const double theta0 = C.lpNorm<1>();
    const double phi0 = sf.barrier(X, f, mu);
    const double D = gphi.dot(dX);
    if (iter == 0) {
      theta_max = 1e4 * std::max(1.0, theta0);
      theta_min = 1e-4 * std::max(1.0, theta0);
    }
    if (mu != filter_mu) {
      filter.clear();
      filter_mu = mu;
    }
    auto switching = [&](double a) {
      return D < 0.0 && a * std::pow(-D, 2.3) > std::pow(theta0, 1.1);
    };
    bool armijo_step = false;
    auto acceptable = [&](double a, double theta, double phi) {
      if (theta > theta_max || in_filter(theta, phi)) return false;
      if (theta0 <= theta_min && switching(a)) {
        armijo_step = true;
        return phi <= phi0 + 1e-4 * a * D;
      }
      armijo_step = false;
      return theta <= (1.0 - gamma_theta) * theta0 || phi <= phi0 - gamma_phi * theta0;
    };
    double alpha_min = gamma_theta;
    if (D < 0.0) {
      alpha_min = std::min(gamma_theta, gamma_phi * theta0 / -D);
      if (theta0 <= theta_min) {
        alpha_min = std::min(alpha_min, std::pow(theta0, 1.1) / std::pow(-D, 2.3));
      }
    }
    alpha_min *= 0.05;

    double alpha = alpha_max;
    bool accepted = false;
    Eigen::VectorXd X_new;
    for (int ls = 0; ls < 80 && alpha >= alpha_min; ++ls) {
      X_new = X + alpha * dX;
      double theta, phi;
      if (measure(X_new, theta, phi) && acceptable(alpha, theta, phi)) {
        accepted = true;
        break;
      }
      if (ls == 0 && std::isfinite(theta) && theta >= theta0) {
        Eigen::VectorXd c_soc = alpha * C;
        Eigen::VectorXd X_prev = X_new;
        double theta_prev = theta;
        for (int p_soc = 0; p_soc < 4; ++p_soc) {
          c_soc += sf.residual(X_prev, problem.constraints(X_prev.head(n)));
          Eigen::VectorXd rhs_soc = rhs;
          rhs_soc.tail(m) = -c_soc;
          Eigen::VectorXd dX_soc = kkt_solve(rhs_soc).head(N);
          for (int i = 0; i < N; ++i) {
            if (sf.fixed[i]) dX_soc[i] = 0.0;
          }
          if (!dX_soc.allFinite()) break;
          const double a_soc = max_step(X, dX_soc);
          const Eigen::VectorXd X_soc = X + a_soc * dX_soc;
          double theta_soc, phi_soc;
          if (!measure(X_soc, theta_soc, phi_soc)) break;
          if (acceptable(alpha, theta_soc, phi_soc)) {
            X_new = X_soc;
            accepted = true;
            break;
          }
          if (theta_soc > 0.99 * theta_prev) break;
          X_prev = X_soc;
          theta_prev = theta_soc;
          c_soc *= a_soc;
        }
        if (accepted) break;
      }
      alpha *= 0.5;
    }

    if (accepted) {
      if (!armijo_step) {
        filter.emplace_back((1.0 - gamma_theta) * theta0, phi0 - gamma_phi * theta0);
      }
      X = X_new;
      y += alpha * dy;
      zl += alpha_z * dzl;
      zu += alpha_z * dzu;
    } else {
      filter.emplace_back((1.0 - gamma_theta) * theta0, phi0 - gamma_phi * theta0);
      if (!control.allow_restoration || theta0 <= opt.tol_feasibility) {
        sol.status = Status::LineSearchFailure;
        break;
      }
      // The restored point must cut the violation and pass the filter of this problem.
      auto accept = [&](const Eigen::VectorXd & xr) {
        const Eigen::VectorXd V = primal_point(xr);
        double theta, phi;
        if (!measure(V, theta, phi)) return false;
        return theta <= 0.9 * theta0 && !in_filter(theta, phi);
      };
      Eigen::VectorXd xr;
      if (!restore(problem, X.head(n), C, mu, opt, accept, xr)) {
        sol.status = Status::LineSearchFailure;
        break;
      }
      X = primal_point(xr);
      alpha = 0.0;
      reset_bound_multipliers();
      estimate_y = true;
    }
    const double kappa_sigma = 1e10;
    for (int i = 0; i < N; ++i) {
      if (sf.has_lo[i]) {
        const double d = slack_dist(X, i, true);
        zl[i] = std::clamp(zl[i], mu / (kappa_sigma * d), kappa_sigma * mu / d);
      }
      if (sf.has_hi[i]) {
        const double d = slack_dist(X, i, false);
        zu[i] = std::clamp(zu[i], mu / (kappa_sigma * d), kappa_sigma * mu / d);
      }
    }
    sol.log.push_back({iter, f, stat, feas, comp, mu, alpha, dw});
    if (opt.verbose) {
      std::fprintf(
        stderr, "%4d f=% .8e stat=%.2e feas=%.2e comp=%.2e mu=%.1e a=%.2e amax=%.2e dw=%.1e\n",
        iter, f, stat, feas, comp, mu, alpha, alpha_max, dw);
    }
  }

  if (sol.status != Status::Converged && acceptable_point) {
    X = acceptable_point->X;
    y = acceptable_point->y;
    zl = acceptable_point->zl;
    zu = acceptable_point->zu;
    sol.stationarity = acceptable_point->stat;
    sol.feasibility = acceptable_point->feas;
    sol.complementarity = acceptable_point->comp;
    sol.iterations = acceptable_point->iter;
    sol.status = Status::Acceptable;
  }
  sol.x = X.head(n);
  sol.y = y;
  sol.z_lower = zl.head(n);
  sol.z_upper = zu.head(n);
  sol.objective = problem.objective(sol.x);
  return sol;
}

}  // namespace

Solution solve(const Problem & problem, const Eigen::VectorXd & x0, const Options & opt)
{
  return run_ipm(problem, x0, opt, RunControl{});
}

Sensitivity rhs_sensitivity(
  const Problem & problem, const Solution & solution, const std::vector<int> & equality_rows,
  double degenerate_tol)
{
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  double f;
  Eigen::VectorXd grad, c;
  SpMat jac, hess;
  problem.derivatives(solution.x, &solution.y, 1.0, f, grad, c, jac, &hess);

  // Active set: bounds on x and inequality rows.
  std::vector<bool> var_free(static_cast<std::size_t>(n), true);
  for (int i = 0; i < n; ++i) {
    const double lo = problem.x_lower[i];
    const double hi = problem.x_upper[i];
    if (lo == hi) {
      var_free[i] = false;
      continue;
    }
    for (int side = 0; side < 2; ++side) {
      const double bound = side == 0 ? lo : hi;
      if (!std::isfinite(bound)) continue;
      const double dist = std::abs(solution.x[i] - bound);
      const double z = side == 0 ? solution.z_lower[i] : solution.z_upper[i];
      if (weakly_active(z, dist, degenerate_tol)) {
        throw Error(
          ErrorCode::ActiveSetDegenerate,
          "variable " + std::to_string(i) + " is weakly active at a bound");
      }
      if (z > dist) var_free[i] = false;
    }
  }
  std::vector<int> active_rows;
  for (int r = 0; r < m; ++r) {
    if (problem.c_lower[r] == problem.c_upper[r]) {
      active_rows.push_back(r);
      continue;
    }
    const double yr = solution.y[r];
    for (int side = 0; side < 2; ++side) {
      const double bound = side == 0 ? problem.c_lower[r] : problem.c_upper[r];
      if (!std::isfinite(bound)) continue;
      const double dist = std::abs(c[r] - bound);
      const double mult = side == 0 ? std::max(0.0, -yr) : std::max(0.0, yr);
      if (weakly_active(mult, dist, degenerate_tol)) {
        throw Error(
          ErrorCode::ActiveSetDegenerate,
          "constraint row " + std::to_string(r) + " is weakly active");
      }
      if (mult > dist) active_rows.push_back(r);
    }
  }
  std::vector<int> free_vars;
  std::vector<int> col_of(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (var_free[i]) {
      col_of[i] = static_cast<int>(free_vars.size());
      free_vars.push_back(i);
    }
  }
  const int nf = static_cast<int>(free_vars.size());
  const int na = static_cast<int>(active_rows.size());
  std::vector<int> pos_of_row(static_cast<std::size_t>(m), -1);
  for (int k = 0; k < na; ++k) pos_of_row[active_rows[k]] = k;

  Triplets t;
  for (int k = 0; k < hess.outerSize(); ++k) {
    for (SpMat::InnerIterator it(hess, k); it; ++it) {
      const int a = col_of[it.row()];
      const int b = col_of[it.col()];
      if (a >= 0 && b >= 0) t.emplace_back(a, b, it.value());
    }
  }
  for (int k = 0; k < jac.outerSize(); ++k) {
    for (SpMat::InnerIterator it(jac, k); it; ++it) {
      const int r = pos_of_row[it.row()];
      const int a = col_of[it.col()];
      if (r >= 0 && a >= 0) {
        t.emplace_back(nf + r, a, it.value());
        t.emplace_back(a, nf + r, it.value());
      }
    }
  }
  SpMat K(nf + na, nf + na);
  K.setFromTriplets(t.begin(), t.end());
  K.makeCompressed();

  Eigen::SparseQR<SpMat, Eigen::COLAMDOrdering<int>> qr;
  qr.setPivotThreshold(1e-12);
  qr.compute(K);
  if (qr.info() != Eigen::Success || qr.rank() < nf + na) {
    throw Error(ErrorCode::SingularKktMatrix, "reduced KKT matrix is singular");
  }
  Sensitivity out;
  out.dx = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(equality_rows.size()));
  out.dy = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(equality_rows.size()));
  for (std::size_t k = 0; k < equality_rows.size(); ++k) {
    const int r = equality_rows[k];
    if (r < 0 || r >= m || problem.c_lower[r] != problem.c_upper[r]) {
      throw Error(ErrorCode::InvalidArgument, "sensitivity needs equality rows");
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + na);
    rhs[nf + pos_of_row[r]] = 1.0;
    const Eigen::VectorXd d = qr.solve(rhs);
    for (int a = 0; a < nf; ++a) out.dx(free_vars[a], static_cast<Eigen::Index>(k)) = d[a];
    for (int q = 0; q < na; ++q) out.dy(active_rows[q], static_cast<Eigen::Index>(k)) = d[nf + q];
  }
  return out;
}

}  // namespace roadplan::nlp
