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


#ifndef ROADPLAN__CSV_HPP_
#define ROADPLAN__CSV_HPP_

#include <string>
#include <vector>

namespace roadplan::csv
{

/// Nine significant digits, the format used by every emitted CSV file.
std::string format(double value);

/// Writes a header line followed by rows. Throws IoFailure.
void write(
  const std::string & path, const std::vector<std::string> & header,
  const std::vector<std::vector<double>> & rows);

/// Parses numeric rows; a first line that fails to parse is skipped as header.
std::vector<std::vector<double>> read(const std::string & path);

}  // namespace roadplan::csv

#endif  // ROADPLAN__CSV_HPP_
