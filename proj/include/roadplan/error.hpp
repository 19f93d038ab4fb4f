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

#ifndef ROADPLAN__ERROR_HPP_
#define ROADPLAN__ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace roadplan
{

enum class ErrorCode {
  InvalidArgument,
  MismatchedVariant,
  SteeringSingularity,
  DuplicatePoint,
  Infeasible,
  NoPath,
  StartOrGoalBlocked,
  BoundsExceeded,
  NegativeEdge,
  DimensionMismatch,
  SingularKktMatrix,
  ActiveSetDegenerate,
  MissingPlan,
  ZeroSpeedSingularity,
  InvalidScenario,
  IoFailure,
  SolverFailure,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; what() holds the human message.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & message)
  : std::runtime_error(message), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace roadplan

#endif  // ROADPLAN__ERROR_HPP_
