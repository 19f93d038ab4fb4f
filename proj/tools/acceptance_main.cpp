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

#include "acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

// Runs every acceptance criterion, or those given as arguments, one line each.
int main(int argc, char ** argv)
{
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id < 1 || id > roadplan::app::kCriteria) {
      std::cerr << "ERROR InvalidArgument: criterion must be 1.." << roadplan::app::kCriteria << "\n";
      return 2;
    }
    only.push_back(id);
  }
  int failed = 0;
  for (const auto & r : roadplan::app::run_acceptance(only, &std::cout)) failed += r.pass ? 0 : 1;
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
