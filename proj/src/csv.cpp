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


#include "roadplan/csv.hpp"

#include "roadplan/error.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace roadplan::csv
{

std::string format(double value)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value == 0.0 ? 0.0 : value);
  return buf;
}

void write(
  const std::string & path, const std::vector<std::string> & header,
  const std::vector<std::vector<double>> & rows)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << '\n';
  for (const auto & row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format(row[i]);
    }
    out << '\n';
  }
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write to " + path + " failed");
  }
}

std::vector<std::vector<double>> read(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) ok = false;
      } catch (const std::exception &) {
        ok = false;
      }
    }
    if (!ok) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::InvalidScenario, "malformed CSV line in " + path + ": " + line);
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace roadplan::csv
