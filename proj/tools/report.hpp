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

#ifndef ROADPLAN_TOOLS__REPORT_HPP_
#define ROADPLAN_TOOLS__REPORT_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace roadplan::app
{

struct FileEntry
{
  /// Relative to the output directory.
  std::string name;
  std::string sha256;
  std::uintmax_t bytes{0};
};

/// Summary of one command run; written next to the artifacts as report.json.
struct RunReport
{
  std::string command;
  std::string out_dir;
  int exit_code{0};
  std::string status;
  double wall_seconds{0.0};
  int iterations{0};
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<FileEntry> files;

  void scalar(const std::string & key, double value) { scalars.emplace_back(key, value); }
  /// Hashes a file already written to the output directory. Throws IoFailure.
  void add_file(const std::string & name);
  std::string to_json() const;
  /// Writes report.json into the output directory. Throws IoFailure.
  void write() const;
};

/// Lowercase hex digest of the file contents. Throws IoFailure.
std::string sha256_file(const std::string & path);

}  // namespace roadplan::app

#endif  // ROADPLAN_TOOLS__REPORT_HPP_
