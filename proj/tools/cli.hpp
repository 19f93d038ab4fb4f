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

#ifndef ROADPLAN_TOOLS__CLI_HPP_
#define ROADPLAN_TOOLS__CLI_HPP_

#include "scenario.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace roadplan::app
{

/// Commands that take a scenario, in help order.
const std::vector<std::string> & scenario_commands();

/// Configuration a command runs when no scenario file is given.
Config builtin_config(const std::string & command);

/**
 * Parses the command line and runs one command. Returns 0 on success, 1 when a solver or
 * planner fails and 2 on invalid input. Errors go to err as "ERROR <code>: message".
 */
int run_cli(int argc, const char * const * argv, std::ostream & out, std::ostream & err);

}  // namespace roadplan::app

#endif  // ROADPLAN_TOOLS__CLI_HPP_
