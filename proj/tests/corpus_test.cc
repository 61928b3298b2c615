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

#include <set>

#include "doctest.h"
#include "endgate/corpus.h"
#include "endgate/errors.h"
#include "endgate/io.h"
#include "test_util.h"

namespace endgate {
namespace {

using testing::SmallCorpus;

TEST_CASE("vocabulary classes and encoding") {
  const TokenVocab v = TokenVocab::Make(3, 2, 1);
  CHECK(v.size() == 6);
  CHECK(v.eos_id() == 6);
  CHECK(v.Encode() == "cccttf");
  CHECK(TokenVocab::Decode(v.Encode()) == v);
  CHECK(v.IsTerminal(3));
  CHECK_FALSE(v.IsTerminal(0));
  CHECK(v.IdsOf(TokenClass::kFiller) == std::vector<int>{5});
  CHECK_THROWS_AS(v.ClassOf(6), IndexError);
  CHECK_THROWS_AS(TokenVocab::Decode("cx"), ParseError);
}

TEST_CASE("category names round trip") {
  for (Category c : {Category::kComplete, Category::kHesitation, Category::kIncomplete}) {
    CHECK(ParseCategory(CategoryName(c)) == c);
  }
  CHECK_THROWS_AS(ParseCategory("partial"), ParseError);
}

TEST_CASE("generated utterances satisfy the corpus invariants") {
  const Corpus c = SmallCorpus(40, 30, 30);
  REQUIRE(c.utterances.size() == 100);
  std::set<std::string> ids;
  for (const Utterance& u : c.utterances) {
    CHECK_NOTHROW(u.Validate(c.vocab));
    ids.insert(u.id);
    CHECK(u.speech[u.eos_frame - 1] == 1);
    for (std::size_t t = u.eos_frame; t < u.num_frames; ++t) CHECK(u.speech[t] == 0);
    const std::size_t tail = u.audio_end_frame + 1 - u.eos_frame;
    if (u.category == Category::kIncomplete) {
      CHECK(tail >= 1);
      CHECK(tail <= kMaxIncompleteTailFrames);
      for (const auto& tok : u.tokens) CHECK_FALSE(c.vocab.IsTerminal(tok.id));
    } else {
      CHECK(tail >= kMinTrailingFrames);
      CHECK(c.vocab.IsTerminal(u.tokens.back().id));
    }
  }
  CHECK(ids.size() == 100);
}

TEST_CASE("hesitation utterances contain a long mid-utterance pause") {
  const Corpus c = SmallCorpus(0, 30, 0);
  GenConfig g;
  for (const Utterance& u : c.utterances) {
    std::size_t longest = 0;
    for (const auto& [b, e] : SilenceRuns(u)) {
      if (b > 0 && e <= u.eos_frame) longest = std::max(longest, e - b);
    }
    CHECK(longest >= g.pause_frames_min);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  CHECK(SmallCorpus(5, 5, 5, 3) == SmallCorpus(5, 5, 5, 3));
  CHECK_FALSE(SmallCorpus(5, 5, 5, 3) == SmallCorpus(5, 5, 5, 4));
}

TEST_CASE("utterance validation catches broken invariants") {
  const Corpus c = SmallCorpus(1, 0, 1);
  Utterance u = c.utterances[0];
  u.eos_frame = u.num_frames + 5;
  CHECK_THROWS_AS(u.Validate(c.vocab), ArgumentError);
  u = c.utterances[0];
  u.features.pop_back();
  CHECK_THROWS_AS(u.Validate(c.vocab), ArgumentError);
  u = c.utterances[1];
  u.tokens.back().id = c.vocab.IdsOf(TokenClass::kTerminal)[0];
  CHECK_THROWS_AS(u.Validate(c.vocab), ArgumentError);
}

TEST_CASE("generator config validation") {
  GenConfig g;
  g.tokens_min = 9;
  CHECK_THROWS_AS(g.Validate(), ConfigError);
  g = GenConfig{};
  g.incomplete_tail_max = kMaxIncompleteTailFrames + 1;
  CHECK_THROWS_AS(g.Validate(), ConfigError);
}

TEST_CASE("split is disjoint, exhaustive, stratified and deterministic") {
  const Corpus c = SmallCorpus(50, 30, 20);
  const CorpusSplit s = SplitCorpus(c, {0.5, 0.1, 0.4}, 9);
  CHECK(s.train.utterances.size() == 50);
  CHECK(s.dev.utterances.size() == 10);
  CHECK(s.test.utterances.size() == 40);
  std::set<std::string> all;
  for (const Corpus* part : {&s.train, &s.dev, &s.test}) {
    for (const auto& u : part->utterances) CHECK(all.insert(u.id).second);
  }
  CHECK(all.size() == 100);
  auto count = [](const Corpus& p, Category cat) {
    std::size_t n = 0;
    for (const auto& u : p.utterances) n += u.category == cat;
    return n;
  };
  CHECK(count(s.test, Category::kComplete) == 20);
  CHECK(count(s.test, Category::kHesitation) == 12);
  CHECK(count(s.test, Category::kIncomplete) == 8);
  const CorpusSplit again = SplitCorpus(c, {0.5, 0.1, 0.4}, 9);
  CHECK(again.test == s.test);
  CHECK_THROWS_AS(SplitCorpus(c, {0.5, 0.5, 0.5}, 1), ConfigError);
}

TEST_CASE("corpus save and load round trip") {
  testing::TempDir dir;
  const Corpus c = SmallCorpus(4, 3, 3);
  SaveCorpus(c, dir / "c");
  CHECK(LoadCorpus(dir / "c") == c);
}

TEST_CASE("corpus loader reports malformed metadata") {
  testing::TempDir dir;
  const Corpus c = SmallCorpus(2, 0, 0);
  SaveCorpus(c, dir / "c");
  std::string meta = io::ReadFile(dir / "c" / "corpus.txt");
  meta.replace(0, 8, "endgateX");
  io::WriteFileAtomic(dir / "c" / "corpus.txt", meta);
  CHECK_THROWS_AS(LoadCorpus(dir / "c"), ParseError);
  CHECK_THROWS(LoadCorpus(dir / "missing"));
}

TEST_CASE("silence runs partition the non-speech frames") {
  const Corpus c = SmallCorpus(3, 3, 3);
  for (const Utterance& u : c.utterances) {
    std::size_t silent = 0;
    for (auto s : u.speech) silent += s == 0;
    std::size_t covered = 0;
    for (const auto& [b, e] : SilenceRuns(u)) {
      CHECK(b < e);
      for (std::size_t t = b; t < e; ++t) CHECK(u.speech[t] == 0);
      covered += e - b;
    }
    CHECK(covered == silent);
  }
}

}  // namespace
}  // namespace endgate
