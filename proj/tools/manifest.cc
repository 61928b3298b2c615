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

#include "manifest.h"

#include <algorithm>
#include <cstdio>
#include <memory>

#include <openssl/evp.h>

#include "endgate/errors.h"
#include "endgate/io.h"

namespace endgate::tools {

std::string Sha256Hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string Sha256File(const std::filesystem::path& path) { return Sha256Hex(io::ReadFile(path)); }

void RunManifest::AddInput(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().filename() != "manifest.txt") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs.emplace_back(f.string(), Sha256File(f));
    return;
  }
  inputs.emplace_back(path.string(), Sha256File(path));
}

std::string RunManifest::Serialize() const {
  std::string out = "endgate-manifest 1\n";
  out += "tool_version " + std::string(kToolVersion) + "\n";
  out += "command " + command + "\n";
  out += "seed " + std::to_string(seed) + "\n";
  out += "config_sha256 " + (config_sha256.empty() ? std::string("-") : config_sha256) + "\n";
  for (const auto& [path, hash] : inputs) out += "input " + path + " sha256 " + hash + "\n";
  for (const auto& path : outputs) out += "output " + path + "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", duration_s);
  out += "duration_s " + std::string(buf) + "\n";
  return out;
}

std::filesystem::path ManifestPathFor(const std::filesystem::path& output) {
  if (std::filesystem::is_directory(output)) return output / "manifest.txt";
  std::filesystem::path p = output;
  p += ".manifest";
  return p;
}

void WriteManifest(const RunManifest& manifest, const std::filesystem::path& output) {
  io::WriteFileAtomic(ManifestPathFor(output), manifest.Serialize());
}

}  // namespace endgate::tools
