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


#ifndef ROADPLAN__LPSOLVE_HPP_
#define ROADPLAN__LPSOLVE_HPP_

#include <Eigen/Core>

#include <vector>

namespace roadplan
{

/// min c'w  s.t.  E w = rhs,  lower <= w <= upper, all bounds finite.
struct BoxedLp
{
  Eigen::VectorXd c;
  Eigen::MatrixXd E;
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult
{
  LpStatus status{LpStatus::Infeasible};
  double value{0.0};
  Eigen::VectorXd w;
  int iterations{0};
};

/**
 * Dense bounded-variable primal simplex with Bland's rule. The instance keeps scratch
 * storage, so use one solver per thread.
 */
class LpSolver
{
public:
  static constexpr double kPivotTol = 1e-10;
  static constexpr double kFeasTol = 1e-9;

  LpResult solve(const BoxedLp & lp);

private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd lo_, hi_, cost_, x_, rhs_cache_;
  Eigen::MatrixXd binv_;
  std::vector<int> basis_;
  std::vector<int> in_basis_;

  bool iterate(int n_enter, int & iterations);
  void refactor();
  void update_basic_values(const Eigen::VectorXd & rhs);
};

/// Largest violation of equality rows and bounds of w; used as a post-hoc check.
double lp_violation(const BoxedLp & lp, const Eigen::VectorXd & w);

}  // namespace roadplan

#endif  // ROADPLAN__LPSOLVE_HPP_
