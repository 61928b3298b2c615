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

#ifndef ENDGATE_CONFIG_H_
#define ENDGATE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "endgate/arbitrator.h"
#include "endgate/corpus.h"
#include "endgate/features.h"
#include "endgate/firstpass.h"
#include "endgate/nnkit.h"
#include "endgate/pipeline.h"
#include "endgate/sweep.h"

namespace endgate {

// Every section mirrors one module config. Component seeds are not set
// directly: they are all derived from `seed`.
struct Config {
  std::uint64_t seed = 1;
  std::size_t jobs = 0;  // 0 = available cores

  GenConfig corpus;
  SplitFractions split = {0.5, 0.1, 0.4};
  MelConfig features;
  FrameModelConfig frame_model;
  nn::TrainConfig frame_train = {0.05, 8, 1, 0, 0.0};
  ArbitratorConfig arbitrator;
  nn::TrainConfig arbitrator_train = {0.1, 5, 8, 0, 0.0};
  ArbitratorSampling arbitrator_sampling;
  DecoderConfig decoder;
  PipelineConfig pipeline;
  SweepSpec sweep;
  // Inputs for `sweep`, relative to the sweep file unless absolute.
  std::string sweep_corpus;
  std::string sweep_frame_model;
  std::string sweep_arbitrator;

  // Re-derives every component seed from `seed` and copies the decoder
  // section into the pipeline and sweep.
  void Resolve();
  void Validate() const;
  std::uint64_t split_seed() const;
};

// Parses INI text. Unknown sections or keys, malformed values and duplicate
// keys throw ConfigError naming the key (and line, where known); range
// violations throw ConfigError naming the key. The result is resolved and
// validated.
Config ParseConfigText(std::string_view text, const std::string& source = "<config>");
Config ParseConfigFile(const std::filesystem::path& path);

// Canonical text of every key, in section order; parsing it back yields an
// identical configuration.
std::string DumpConfig(const Config& config);

// Applies ENDGATE_SEED when set. Throws ConfigError for unparsable values.
void ApplySeedOverride(Config* config);

}  // namespace endgate

#endif  // ENDGATE_CONFIG_H_
