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


#include "roadplan/lpsolve.hpp"

#include "roadplan/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace roadplan
{
namespace
{
constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const BoxedLp & lp)
{
  const auto n = lp.c.size();
  if (lp.E.cols() != n || lp.lower.size() != n || lp.upper.size() != n ||
      lp.E.rows() != lp.rhs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent LP dimensions");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(lp.lower[j]) || !std::isfinite(lp.upper[j]) || lp.lower[j] > lp.upper[j]) {
      throw Error(ErrorCode::InvalidArgument, "LP bounds must be finite and ordered");
    }
  }
  if (!lp.c.allFinite() || !lp.E.allFinite() || !lp.rhs.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "LP data must be finite");
  }
}

}  // namespace

void LpSolver::refactor()
{
  const auto m = static_cast<Eigen::Index>(basis_.size());
  if (m == 0) {
    binv_.resize(0, 0);
    return;
  }
  Eigen::MatrixXd B(m, m);
  for (Eigen::Index i = 0; i < m; ++i) B.col(i) = A_.col(basis_[i]);
  binv_ = B.fullPivLu().inverse();
}

void LpSolver::update_basic_values(const Eigen::VectorXd & rhs)
{
  Eigen::VectorXd r = rhs;
  for (Eigen::Index j = 0; j < A_.cols(); ++j) {
    if (in_basis_[j] < 0 && x_[j] != 0.0) r -= A_.col(j) * x_[j];
  }
  const Eigen::VectorXd xb = binv_ * r;
  for (std::size_t i = 0; i < basis_.size(); ++i) x_[basis_[i]] = xb[static_cast<Eigen::Index>(i)];
}

bool LpSolver::iterate(int n_enter, int & iterations)
{
  const auto m = static_cast<Eigen::Index>(basis_.size());
  const double dtol = 1e-11 * (1.0 + cost_.cwiseAbs().maxCoeff());
  const int max_iter = 100 * static_cast<int>(A_.cols() + m) + 1000;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd cb = [&] {
      Eigen::VectorXd v(m);
      for (Eigen::Index i = 0; i < m; ++i) v[i] = cost_[basis_[i]];
      return v;
    }();
    const Eigen::RowVectorXd y = cb.transpose() * binv_;

    int enter = -1;
    double dir = 0.0;
    for (int j = 0; j < n_enter; ++j) {
      if (in_basis_[j] >= 0 || !(hi_[j] > lo_[j])) continue;
      const double d = cost_[j] - y.dot(A_.col(j));
      const bool at_upper = x_[j] == hi_[j];
      if (!at_upper && d < -dtol) {
        enter = j;
        dir = 1.0;
        break;
      }
      if (at_upper && d > dtol) {
        enter = j;
        dir = -1.0;
        break;
      }
    }
    if (enter < 0) return true;

    const Eigen::VectorXd col = binv_ * A_.col(enter);
    double theta = hi_[enter] - lo_[enter];
    Eigen::Index leave = -1;
    bool leave_to_upper = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(col[i]) <= kPivotTol) continue;
      const int bv = basis_[i];
      const double delta = -dir * col[i];
      double lim = delta < 0.0 ? (x_[bv] - lo_[bv]) / -delta : (hi_[bv] - x_[bv]) / delta;
      lim = std::max(lim, 0.0);
      if (lim < theta || (lim == theta && leave >= 0 && bv < basis_[leave])) {
        theta = lim;
        leave = i;
        leave_to_upper = delta > 0.0;
      }
    }
    if (!std::isfinite(theta)) return false;
    ++iterations;
    if (leave < 0) {
      x_[enter] = dir > 0.0 ? hi_[enter] : lo_[enter];
    } else {
      const int out = basis_[leave];
      x_[out] = leave_to_upper ? hi_[out] : lo_[out];
      in_basis_[out] = -1;
      basis_[leave] = enter;
      in_basis_[enter] = static_cast<int>(leave);
      refactor();
    }
    // Basic values are recomputed from scratch after every step.
    update_basic_values(rhs_cache_);
  }
  throw Error(ErrorCode::SolverFailure, "simplex iteration limit reached");
}

LpResult LpSolver::solve(const BoxedLp & lp)
{
  validate(lp);
  const auto n = lp.c.size();
  const auto m = lp.E.rows();
  LpResult result;

  A_.resize(m, n + m);
  A_.leftCols(n) = lp.E;
  A_.rightCols(m).setZero();
  lo_.resize(n + m);
  hi_.resize(n + m);
  lo_.head(n) = lp.lower;
  hi_.head(n) = lp.upper;
  lo_.tail(m).setZero();
  hi_.tail(m).setConstant(kInf);
  x_.resize(n + m);
  x_.head(n) = lp.lower;
  rhs_cache_ = lp.rhs;

  const Eigen::VectorXd res = lp.rhs - lp.E * lp.lower;
  basis_.assign(static_cast<std::size_t>(m), 0);
  in_basis_.assign(static_cast<std::size_t>(n + m), -1);
  for (Eigen::Index i = 0; i < m; ++i) {
    A_(i, n + i) = res[i] >= 0.0 ? 1.0 : -1.0;
    x_[n + i] = std::abs(res[i]);
    basis_[i] = static_cast<int>(n + i);
    in_basis_[n + i] = static_cast<int>(i);
  }
  refactor();

  // Phase 1: drive the artificial variables to zero.
  cost_ = Eigen::VectorXd::Zero(n + m);
  cost_.tail(m).setOnes();
  iterate(static_cast<int>(n + m), result.iterations);
  const double infeas = x_.tail(m).sum();
  const double rhs_scale = m > 0 ? lp.rhs.cwiseAbs().maxCoeff() : 0.0;
  if (infeas > kFeasTol * (1.0 + rhs_scale)) {
    result.status = LpStatus::Infeasible;
    result.w = x_.head(n);
    return result;
  }

  // Phase 2: artificials pinned at zero and never re-enter.
  for (Eigen::Index i = 0; i < m; ++i) {
    hi_[n + i] = 0.0;
    if (in_basis_[n + i] < 0) x_[n + i] = 0.0;
  }
  update_basic_values(rhs_cache_);
  cost_.head(n) = lp.c;
  cost_.tail(m).setZero();
  if (!iterate(static_cast<int>(n), result.iterations)) {
    result.status = LpStatus::Unbounded;
    return result;
  }
  result.w = x_.head(n).cwiseMax(lp.lower).cwiseMin(lp.upper);
  result.value = lp.c.dot(result.w);
  result.status = LpStatus::Optimal;
  return result;
}

double lp_violation(const BoxedLp & lp, const Eigen::VectorXd & w)
{
  double v = 0.0;
  if (lp.E.rows() > 0) v = (lp.E * w - lp.rhs).cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    v = std::max(v, lp.lower[j] - w[j]);
    v = std::max(v, w[j] - lp.upper[j]);
  }
  return v;
}

}  // namespace roadplan
