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

#ifndef ENDGATE_CORPUS_H_
#define ENDGATE_CORPUS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "endgate/features.h"

namespace endgate {

enum class TokenClass : std::uint8_t { kContent, kTerminal, kFiller };

// Speech tokens are ids [0, size()); size() itself is reserved for the EOS
// symbol and never appears inside a transcript or hypothesis.
class TokenVocab {
 public:
  TokenVocab() = default;
  explicit TokenVocab(std::vector<TokenClass> classes);
  static TokenVocab Make(std::size_t content, std::size_t terminal,
                         std::size_t filler);

  std::size_t size() const { return classes_.size(); }
  int eos_id() const { return static_cast<int>(classes_.size()); }
  bool Contains(int id) const {
    return id >= 0 && static_cast<std::size_t>(id) < classes_.size();
  }
  TokenClass ClassOf(int id) const;
  bool IsTerminal(int id) const { return ClassOf(id) == TokenClass::kTerminal; }
  std::vector<int> IdsOf(TokenClass cls) const;

  // One letter per id: c(ontent), t(erminal), f(iller).
  std::string Encode() const;
  static TokenVocab Decode(std::string_view letters);

  bool operator==(const TokenVocab& other) const = default;

 private:
  std::vector<TokenClass> classes_;
};

enum class Category : std::uint8_t { kComplete, kHesitation, kIncomplete };

std::string_view CategoryName(Category category);
Category ParseCategory(std::string_view name);

struct TokenAlignment {
  int id = 0;
  std::size_t end_frame = 0;  // last frame of the token, inclusive

  bool operator==(const TokenAlignment& other) const = default;
};

// Frames are 30ms decision frames stored flat (num_frames x 192).
// eos_frame is the first frame after the last speech frame; audio_end_frame is
// the index of the last frame.
struct Utterance {
  std::string id;
  Category category = Category::kComplete;
  std::size_t num_frames = 0;
  std::vector<double> features;
  std::vector<std::uint8_t> speech;  // generation-time segment type per frame
  std::vector<TokenAlignment> tokens;
  std::size_t eos_frame = 0;
  std::size_t audio_end_frame = 0;

  std::span<const double> frame(std::size_t t) const {
    return std::span<const double>(features).subspan(t * kFrameDim, kFrameDim);
  }
  std::vector<int> TokenIds() const;

  // Throws ArgumentError naming the broken invariant.
  void Validate(const TokenVocab& vocab) const;

  bool operator==(const Utterance& other) const = default;
};

// Incomplete utterances carry at most this much audio after eos_frame (300ms).
inline constexpr std::size_t kMaxIncompleteTailFrames = 10;
// Complete and hesitation utterances carry at least 2s of trailing silence.
inline constexpr std::size_t kMinTrailingFrames = 67;

struct Corpus {
  TokenVocab vocab;
  std::vector<Utterance> utterances;

  bool operator==(const Corpus& other) const = default;
};

struct GenConfig {
  std::uint64_t seed = 7;
  std::size_t num_complete = 500;
  std::size_t num_hesitation = 300;
  std::size_t num_incomplete = 200;

  std::size_t vocab_content = 24;
  std::size_t vocab_terminal = 4;
  std::size_t vocab_filler = 3;

  std::size_t tokens_min = 4;  // per utterance, terminal included
  std::size_t tokens_max = 8;
  std::size_t token_frames_min = 5;
  std::size_t token_frames_max = 9;
  std::size_t gap_frames_max = 2;  // inter-token gaps are 0..max frames
  std::size_t lead_frames_min = 3;
  std::size_t lead_frames_max = 6;
  std::size_t pause_frames_min = 10;  // hesitation mid-pause
  std::size_t pause_frames_max = 30;
  std::size_t hesitation_tail_tokens = 3;  // tokens after the mid-pause
  std::size_t trailing_frames_min = kMinTrailingFrames;
  std::size_t trailing_frames_max = 75;
  std::size_t incomplete_tail_min = 1;
  std::size_t incomplete_tail_max = kMaxIncompleteTailFrames;
  double filler_prob = 0.05;             // any non-final token
  double hesitation_filler_prob = 0.5;   // token right before the pause

  double silence_mean = -6.0;
  double speech_mean = -2.0;
  double noise_std = 1.0;
  double loudness_min = 0.5;  // speech frames scale their offset by U[min, 1]
  double class_offset = 0.1;  // terminal/filler pattern amplitude

  void Validate() const;
};

Corpus GenerateCorpus(const GenConfig& config);

struct SplitFractions {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Disjoint, exhaustive, stratified by category, deterministic in `seed`.
CorpusSplit SplitCorpus(const Corpus& corpus, const SplitFractions& fractions,
                        std::uint64_t seed);

// <dir>/corpus.txt (metadata, one record per utterance) and
// <dir>/features.bin (float64 payload). See docs/corpus-format.md.
void SaveCorpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus LoadCorpus(const std::filesystem::path& dir);

// Maximal runs of non-speech frames as [begin, end) pairs.
std::vector<std::pair<std::size_t, std::size_t>> SilenceRuns(
    const Utterance& utterance);

}  // namespace endgate

#endif  // ENDGATE_CORPUS_H_
