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

#include "test_util.h"

#include <atomic>
#include <random>

#include <unistd.h>

namespace endgate::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("endgate_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" +
           std::to_string(rd()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Config UnitTestConfig() {
  Config config;
  config.corpus.num_complete = 800;
  config.corpus.num_hesitation = 480;
  config.corpus.num_incomplete = 320;
  config.Resolve();
  config.Validate();
  return config;
}

const Trained& SharedModels() {
  static const Trained trained = [] {
    Trained t;
    t.config = UnitTestConfig();
    const Corpus corpus = GenerateCorpus(t.config.corpus);
    t.split = SplitCorpus(corpus, t.config.split, t.config.split_seed());
    t.frame_model = TrainFrameModel(t.split.train, t.config.frame_model, t.config.frame_train);
    t.arbitrator = TrainArbitrator(t.split.train, t.frame_model, t.config.decoder, t.config.arbitrator,
                                   t.config.arbitrator_train, t.config.arbitrator_sampling);
    return t;
  }();
  return trained;
}

Corpus SmallCorpus(std::size_t complete, std::size_t hesitation, std::size_t incomplete,
                   std::uint64_t seed) {
  GenConfig g;
  g.seed = seed;
  g.num_complete = complete;
  g.num_hesitation = hesitation;
  g.num_incomplete = incomplete;
  return GenerateCorpus(g);
}

}  // namespace endgate::testing
