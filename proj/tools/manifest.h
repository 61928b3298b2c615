// Copyright 2026 The Endgate Authors
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

#ifndef ENDGATE_TOOLS_MANIFEST_H_
#define ENDGATE_TOOLS_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace endgate::tools {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::string config_sha256;  // empty when the command takes no config
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::vector<std::string> outputs;
  double duration_s = 0.0;

  // A directory input contributes one entry per regular file, sorted.
  void AddInput(const std::filesystem::path& path);
  std::string Serialize() const;
};

// Directory outputs get <dir>/manifest.txt; file outputs get <file>.manifest.
std::filesystem::path ManifestPathFor(const std::filesystem::path& output);
void WriteManifest(const RunManifest& manifest, const std::filesystem::path& output);

}  // namespace endgate::tools

#endif  // ENDGATE_TOOLS_MANIFEST_H_
