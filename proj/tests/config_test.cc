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

#include <cstdlib>

#include "doctest.h"
#include "endgate/config.h"
#include "endgate/errors.h"
#include "endgate/io.h"
#include "test_util.h"

namespace endgate {
namespace {

std::string ErrorOf(const std::string& text) {
  try {
    ParseConfigText(text, "test.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

TEST_CASE("a minimal config is valid") {
  const Config c = ParseConfigText("[run]\nseed = 5\n");
  CHECK(c.seed == 5);
  CHECK(c.pipeline.t_ep == 0.5);
  CHECK_NOTHROW(ParseConfigText(""));
}

TEST_CASE("an out-of-range threshold names the key") {
  const std::string err = ErrorOf("[pipeline]\nT_EP = 1.5\n");
  CHECK(err.find("T_EP") != std::string::npos);
  CHECK(ErrorOf("[pipeline]\nT_arb = -1\n").find("T_arb") != std::string::npos);
}

TEST_CASE("a duplicate key is a parse error with its location") {
  const std::string err = ErrorOf("[run]\nseed = 1\nseed = 2\n");
  CHECK_FALSE(err.empty());
  CHECK(err.find("test.ini:3") != std::string::npos);
}

TEST_CASE("unknown sections and keys are rejected by name") {
  CHECK(ErrorOf("[nope]\nx = 1\n").find("nope") != std::string::npos);
  CHECK(ErrorOf("[run]\nsed = 1\n").find("sed") != std::string::npos);
  CHECK(ErrorOf("seed = 1\n").find("seed") != std::string::npos);
}

TEST_CASE("malformed values name the key") {
  CHECK(ErrorOf("[run]\nseed = many\n").find("seed") != std::string::npos);
  CHECK(ErrorOf("[pipeline]\nuse_arbitrator = maybe\n").find("use_arbitrator") != std::string::npos);
  CHECK(ErrorOf("[pipeline]\nfirst_pass = sideways\n").find("first_pass") != std::string::npos);
  CHECK(ErrorOf("[frame_model]\nactivation = swish\n").find("activation") != std::string::npos);
}

TEST_CASE("cross-field range violations are reported") {
  CHECK_FALSE(ErrorOf("[corpus]\ntokens_min = 9\ntokens_max = 4\n").empty());
  CHECK_FALSE(ErrorOf("[corpus]\nsplit_train = 0.9\n").empty());
  CHECK_FALSE(ErrorOf("[decoder]\np_delay = 2\n").empty());
  CHECK(ErrorOf("[sweep]\nT_EP = 0.5, 1.2\n").find("T_EP") != std::string::npos);
}

TEST_CASE("lists parse with and without spaces") {
  const Config c = ParseConfigText(
      "[sweep]\nT_EP = 0.5,0.9\nT_arb = none\nfirst_pass = both, acoustic_only\n"
      "[frame_model]\nhidden = 16, 8\n");
  CHECK(c.sweep.t_ep_grid == std::vector<double>{0.5, 0.9});
  CHECK(c.sweep.t_arb_grid.empty());
  CHECK(c.sweep.first_pass == std::vector<FirstPass>{FirstPass::kBoth, FirstPass::kAcousticOnly});
  CHECK(c.frame_model.hidden == std::vector<std::size_t>{16, 8});
}

TEST_CASE("component seeds derive from the root seed") {
  const Config a = ParseConfigText("[run]\nseed = 1\n");
  const Config b = ParseConfigText("[run]\nseed = 2\n");
  CHECK(a.corpus.seed != b.corpus.seed);
  CHECK(a.frame_train.seed != b.frame_train.seed);
  CHECK(a.decoder.seed != b.decoder.seed);
  CHECK(a.pipeline.decoder.seed == a.decoder.seed);
  CHECK(a.sweep.decoder.seed == a.decoder.seed);
  CHECK(a.split_seed() != b.split_seed());
  CHECK(ParseConfigText("[run]\nseed = 1\n").corpus.seed == a.corpus.seed);
}

TEST_CASE("pipeline eos_scale survives decoder propagation") {
  const Config c = ParseConfigText("[pipeline]\neos_scale = 2\n[decoder]\neos_prob = 0.3\n");
  CHECK(c.pipeline.decoder.eos_scale == 2.0);
  CHECK(c.pipeline.decoder.eos_prob == 0.3);
}

TEST_CASE("dump and parse round trip") {
  Config c = ParseConfigText("[run]\nseed = 9\n[pipeline]\nT_EP = 0.7\n[sweep]\nmode = partial\n");
  const std::string dump = DumpConfig(c);
  CHECK(DumpConfig(ParseConfigText(dump)) == dump);
  CHECK(dump.find("T_EP = 0.7") != std::string::npos);
}

TEST_CASE("config files report missing paths") {
  CHECK_THROWS(ParseConfigFile("/nonexistent/endgate.ini"));
  testing::TempDir dir;
  io::WriteFileAtomic(dir / "c.ini", "[run]\nseed = 4\n");
  CHECK(ParseConfigFile(dir / "c.ini").seed == 4);
}

TEST_CASE("ENDGATE_SEED overrides the root seed") {
  Config c = ParseConfigText("[run]\nseed = 1\n");
  const std::uint64_t before = c.corpus.seed;
  ::setenv("ENDGATE_SEED", "77", 1);
  ApplySeedOverride(&c);
  CHECK(c.seed == 77);
  CHECK(c.corpus.seed != before);
  ::setenv("ENDGATE_SEED", "x", 1);
  CHECK_THROWS_AS(ApplySeedOverride(&c), ConfigError);
  ::unsetenv("ENDGATE_SEED");
}

}  // namespace
}  // namespace endgate
