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


#include "roadplan/error.hpp"

namespace roadplan
{

std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::InvalidArgument:
      return "InvalidArgument";
    case ErrorCode::MismatchedVariant:
      return "MismatchedVariant";
    case ErrorCode::SteeringSingularity:
      return "SteeringSingularity";
    case ErrorCode::DuplicatePoint:
      return "DuplicatePoint";
    case ErrorCode::Infeasible:
      return "Infeasible";
    case ErrorCode::NoPath:
      return "NoPath";
    case ErrorCode::StartOrGoalBlocked:
      return "StartOrGoalBlocked";
    case ErrorCode::BoundsExceeded:
      return "BoundsExceeded";
    case ErrorCode::NegativeEdge:
      return "NegativeEdge";
    case ErrorCode::DimensionMismatch:
      return "DimensionMismatch";
    case ErrorCode::SingularKktMatrix:
      return "SingularKktMatrix";
    case ErrorCode::ActiveSetDegenerate:
      return "ActiveSetDegenerate";
    case ErrorCode::MissingPlan:
      return "MissingPlan";
    case ErrorCode::ZeroSpeedSingularity:
      return "ZeroSpeedSingularity";
    case ErrorCode::InvalidScenario:
      return "InvalidScenario";
    case ErrorCode::IoFailure:
      return "IoFailure";
    case ErrorCode::SolverFailure:
      return "SolverFailure";
  }
  return "Unknown";
}

}  // namespace roadplan
