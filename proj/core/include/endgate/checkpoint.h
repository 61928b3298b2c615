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

#ifndef ENDGATE_CHECKPOINT_H_
#define ENDGATE_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "endgate/nnkit.h"

namespace endgate {

// On-disk model container. Layout:
//
//   endgate-checkpoint 1
//   kind <name>
//   seed <u64>
//   arch <key> <value>          (zero or more, sorted by key)
//   tensor <name> <d0> <d1> ... (one per tensor, payload order)
//   payload <total float64 count>
//   <raw little-endian float64 values>
//
// Reading then writing a checkpoint reproduces the file byte for byte.
struct Checkpoint {
  std::string kind;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> arch;
  std::vector<std::pair<std::string, nn::Tensor>> tensors;

  const nn::Tensor& Get(const std::string& name) const;
  const std::string& Arch(const std::string& key) const;

  bool operator==(const Checkpoint& other) const = default;
};

std::string SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint ParseCheckpoint(const std::string& bytes);

void WriteCheckpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);
// Throws IoError / ParseError; an error never yields a partial checkpoint.
Checkpoint ReadCheckpoint(const std::filesystem::path& path);

// Helpers for models built from Mlp stacks: tensors named
// <prefix>.<layer>.w / <prefix>.<layer>.b, activations recorded in arch.
void AddMlp(Checkpoint* checkpoint, const std::string& prefix,
            const nn::Mlp& mlp);
nn::Mlp GetMlp(const Checkpoint& checkpoint, const std::string& prefix);

}  // namespace endgate

#endif  // ENDGATE_CHECKPOINT_H_
