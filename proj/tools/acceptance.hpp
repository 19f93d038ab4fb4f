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


#ifndef ROADPLAN_TOOLS__ACCEPTANCE_HPP_
#define ROADPLAN_TOOLS__ACCEPTANCE_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace roadplan::app
{

struct CriterionResult
{
  int id{0};
  std::string title;
  bool pass{false};
  /// Measured values behind the verdict.
  std::string detail;
  double seconds{0.0};
};

constexpr int kCriteria = 10;

/// Runs the listed criteria (all when empty), printing one line per criterion as it finishes.
std::vector<CriterionResult> run_acceptance(const std::vector<int> & only, std::ostream * lines);

std::string format_line(const CriterionResult & r);

}  // namespace roadplan::app

#endif  // ROADPLAN_TOOLS__ACCEPTANCE_HPP_
