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


#ifndef ROADPLAN__NLP_HPP_
#define ROADPLAN__NLP_HPP_

#include "roadplan/autodiff.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace roadplan::nlp
{

constexpr int kMaxBlockInputs = 16;
using Jet = ad::Dual<double, kMaxBlockInputs>;
using Jet2 = ad::Dual<Jet, kMaxBlockInputs>;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Small dense function of at most kMaxBlockInputs variables.
class BlockFunction
{
public:
  virtual ~BlockFunction() = default;
  virtual void eval(const double * in, double * out) const = 0;
  virtual void eval(const Jet2 * in, Jet2 * out) const = 0;
};

template <class F>
class LambdaBlock : public BlockFunction
{
public:
  explicit LambdaBlock(F f) : f_(std::move(f)) {}
  void eval(const double * in, double * out) const override { f_(in, out); }
  void eval(const Jet2 * in, Jet2 * out) const override { f_(in, out); }

private:
  F f_;
};

/// Wraps a generic lambda (const T * in, T * out) evaluated for double and Jet2.
template <class F>
std::shared_ptr<BlockFunction> make_block(F f)
{
  return std::make_shared<LambdaBlock<F>>(std::move(f));
}

constexpr int kObjective = -1;

struct Block
{
  std::vector<int> vars;
  /// Output k is added to the objective (kObjective) or to constraint row targets[k].
  std::vector<int> targets;
  std::shared_ptr<BlockFunction> fn;
};

/// min f(x)  s.t.  c_lower <= c(x) <= c_upper,  x_lower <= x <= x_upper.
class Problem
{
public:
  int add_variable(double lower, double upper, double guess = 0.0);
  int add_constraint(double lower, double upper);
  void add_block(std::vector<int> vars, std::vector<int> targets, std::shared_ptr<BlockFunction> fn);

  int num_variables() const { return static_cast<int>(x_lower.size()); }
  int num_constraints() const { return static_cast<int>(c_lower.size()); }

  double objective(const Eigen::VectorXd & x) const;
  Eigen::VectorXd constraints(const Eigen::VectorXd & x) const;
  /// Values, objective gradient, constraint Jacobian and, when y is given, the Hessian of
  /// obj_factor * f + y' c.
  void derivatives(
    const Eigen::VectorXd & x, const Eigen::VectorXd * y, double obj_factor, double & f,
    Eigen::VectorXd & grad, Eigen::VectorXd & c, Eigen::SparseMatrix<double> & jac,
    Eigen::SparseMatrix<double> * hess) const;

  std::vector<double> x_lower, x_upper, x_guess;
  std::vector<double> c_lower, c_upper;
  std::vector<Block> blocks;
};

struct Options
{
  double tol_stationarity{1e-6};
  double tol_feasibility{1e-8};
  double tol_complementarity{1e-8};
  int max_iterations{500};
  double mu_init{0.1};
  double bound_push{1e-2};
  bool verbose{false};
  /// Stop after this many seconds of wall time; zero disables the limit.
  double time_limit{0.0};
  /// Looser tolerances; when positive, a run that would end in failure returns the last iterate
  /// meeting them with status Acceptable.
  double acceptable_stationarity{0.0};
  double acceptable_feasibility{0.0};
  double acceptable_complementarity{0.0};
};

enum class Status {
  Converged,
  MaxIterations,
  LineSearchFailure,
  NumericalFailure,
  TimeLimit,
  Acceptable
};

std::string to_string(Status status);

struct IterationLog
{
  int iteration;
  double objective;
  double stationarity;
  double feasibility;
  double complementarity;
  double mu;
  double step;
  double regularization;
};

struct Solution
{
  Status status{Status::NumericalFailure};
  Eigen::VectorXd x;
  /// Multipliers of the constraint rows (sign: grad f + J' y - z_lower + z_upper = 0).
  Eigen::VectorXd y;
  Eigen::VectorXd z_lower;
  Eigen::VectorXd z_upper;
  double objective{0.0};
  double stationarity{0.0};
  double feasibility{0.0};
  double complementarity{0.0};
  int iterations{0};
  std::vector<IterationLog> log;

  bool ok() const { return status == Status::Converged; }
};

/// Primal-dual interior point method with exact Hessians and an l1 merit line search.
Solution solve(const Problem & problem, const Eigen::VectorXd & x0, const Options & options = {});

/// Tangent of the primal-dual solution with respect to the right-hand side of equality rows.
struct Sensitivity
{
  /// dx / d rhs_k, one column per requested row.
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};

/**
 * Differentiates the KKT conditions at a converged solution with the active set held fixed.
 * Throws ActiveSetDegenerate when a bound or inequality is weakly active (multiplier and slack
 * both below degenerate_tol, or both of comparable size below its square root) and SingularKktMatrix when the reduced system is singular.
 */
Sensitivity rhs_sensitivity(
  const Problem & problem, const Solution & solution, const std::vector<int> & equality_rows,
  double degenerate_tol = 1e-6);

}  // namespace roadplan::nlp

#endif  // ROADPLAN__NLP_HPP_
