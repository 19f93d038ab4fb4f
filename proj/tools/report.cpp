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

#include "report.hpp"

#include "roadplan/error.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

namespace roadplan::app
{

std::string sha256_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoFailure, "sha256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static const char * hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void RunReport::add_file(const std::string & name)
{
  const std::string path = (std::filesystem::path(out_dir) / name).string();
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot stat " + path);
  files.push_back({name, sha256_file(path), size});
}

std::string RunReport::to_json() const
{
  nlohmann::ordered_json j;
  j["command"] = command;
  j["status"] = status;
  j["exit_code"] = exit_code;
  j["wall_seconds"] = wall_seconds;
  j["iterations"] = iterations;
  nlohmann::ordered_json s = nlohmann::ordered_json::object();
  // JSON has no infinity; such values are written as strings.
  for (const auto & [k, v] : scalars) s[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(v > 0 ? "inf" : (v < 0 ? "-inf" : "nan"));
  j["scalars"] = s;
  nlohmann::ordered_json f = nlohmann::ordered_json::array();
  for (const FileEntry & e : files) f.push_back({{"name", e.name}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  j["files"] = f;
  return j.dump(2) + "\n";
}

void RunReport::write() const
{
  const std::string path = (std::filesystem::path(out_dir) / "report.json").string();
  std::ofstream out(path);
  out << to_json();
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
}

}  // namespace roadplan::app
