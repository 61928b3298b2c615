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

#include "endgate/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "endgate/errors.h"
#include "endgate/io.h"

namespace endgate {

namespace {

using nn::Rng;

std::size_t UniformInt(Rng& rng, std::size_t lo, std::size_t hi) {
  const auto span = static_cast<double>(hi - lo + 1);
  auto k = static_cast<std::size_t>(nn::Uniform01(rng) * span);
  return lo + std::min(k, hi - lo);
}

int Pick(Rng& rng, const std::vector<int>& ids) {
  return ids[UniformInt(rng, 0, ids.size() - 1)];
}

struct ClassPatterns {
  std::array<std::vector<double>, 3> offsets;
};

ClassPatterns MakePatterns(const GenConfig& config) {
  Rng rng(io::DeriveSeed(config.seed, "class-patterns", 0));
  ClassPatterns p;
  p.offsets[static_cast<int>(TokenClass::kContent)].assign(kFrameDim, 0.0);
  for (TokenClass c : {TokenClass::kTerminal, TokenClass::kFiller}) {
    std::vector<double>& v = p.offsets[static_cast<int>(c)];
    v.resize(kFrameDim);
    for (double& x : v) {
      x = (nn::Uniform01(rng) < 0.5 ? -1.0 : 1.0) * config.class_offset;
    }
  }
  return p;
}

class UtteranceBuilder {
 public:
  UtteranceBuilder(const GenConfig& config, const ClassPatterns& patterns,
                   const TokenVocab& vocab, Rng* rng)
      : config_(config), patterns_(patterns), vocab_(vocab), rng_(rng) {}

  void Silence(std::size_t frames) {
    for (std::size_t i = 0; i < frames; ++i) {
      for (std::size_t d = 0; d < kFrameDim; ++d) {
        utt_.features.push_back(config_.silence_mean +
                                config_.noise_std * nn::StandardNormal(*rng_));
      }
      utt_.speech.push_back(0);
    }
  }

  void Token(int id, std::size_t frames) {
    const std::vector<double>& pattern =
        patterns_.offsets[static_cast<int>(vocab_.ClassOf(id))];
    const double lift = config_.speech_mean - config_.silence_mean;
    for (std::size_t i = 0; i < frames; ++i) {
      const double loud =
          config_.loudness_min +
          (1.0 - config_.loudness_min) * nn::Uniform01(*rng_);
      for (std::size_t d = 0; d < kFrameDim; ++d) {
        utt_.features.push_back(config_.silence_mean + loud * lift +
                                pattern[d] +
                                config_.noise_std * nn::StandardNormal(*rng_));
      }
      utt_.speech.push_back(1);
    }
    utt_.tokens.push_back({id, utt_.speech.size() - 1});
  }

  Utterance Finish(std::string id, Category category) {
    utt_.id = std::move(id);
    utt_.category = category;
    utt_.num_frames = utt_.speech.size();
    utt_.eos_frame = utt_.tokens.empty() ? 0 : utt_.tokens.back().end_frame + 1;
    utt_.audio_end_frame = utt_.num_frames - 1;
    return std::move(utt_);
  }

 private:
  const GenConfig& config_;
  const ClassPatterns& patterns_;
  const TokenVocab& vocab_;
  Rng* rng_;
  Utterance utt_;
};

Utterance GenerateOne(const GenConfig& config, const ClassPatterns& patterns,
                      const TokenVocab& vocab, Category category,
                      std::size_t index) {
  Rng rng(io::DeriveSeed(config.seed, "utterance", index));
  const std::vector<int> content = vocab.IdsOf(TokenClass::kContent);
  const std::vector<int> terminal = vocab.IdsOf(TokenClass::kTerminal);
  const std::vector<int> filler = vocab.IdsOf(TokenClass::kFiller);
  auto non_final = [&] {
    if (!filler.empty() && nn::Uniform01(rng) < config.filler_prob) {
      return Pick(rng, filler);
    }
    return Pick(rng, content);
  };

  std::size_t n = UniformInt(rng, config.tokens_min, config.tokens_max);
  std::vector<int> ids;
  if (category == Category::kIncomplete) {
    // Cut off before the sentence completes: never a terminal token.
    n = std::max<std::size_t>(1, n - 1);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(non_final());
  } else {
    if (category == Category::kHesitation) {
      n = std::max(n, config.hesitation_tail_tokens + 1);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) ids.push_back(non_final());
    ids.push_back(Pick(rng, terminal));
  }
  // Index of the token after which the mid-pause is inserted.
  std::size_t pause_after = ids.size();
  if (category == Category::kHesitation) {
    pause_after = ids.size() - config.hesitation_tail_tokens - 1;
    if (!filler.empty() && nn::Uniform01(rng) < config.hesitation_filler_prob) {
      ids[pause_after] = Pick(rng, filler);
    }
  }

  UtteranceBuilder b(config, patterns, vocab, &rng);
  b.Silence(UniformInt(rng, config.lead_frames_min, config.lead_frames_max));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    b.Token(ids[i],
            UniformInt(rng, config.token_frames_min, config.token_frames_max));
    if (i + 1 == ids.size()) break;
    if (i == pause_after) {
      b.Silence(
          UniformInt(rng, config.pause_frames_min, config.pause_frames_max));
    } else {
      b.Silence(UniformInt(rng, 0, config.gap_frames_max));
    }
  }
  if (category == Category::kIncomplete) {
    b.Silence(UniformInt(rng, config.incomplete_tail_min,
                         config.incomplete_tail_max));
  } else {
    b.Silence(UniformInt(rng, config.trailing_frames_min,
                         config.trailing_frames_max));
  }
  char id[32];
  std::snprintf(id, sizeof(id), "utt%06zu", index);
  return b.Finish(id, category);
}

std::string EncodeSpeech(const std::vector<std::uint8_t>& speech) {
  std::string out;
  std::size_t i = 0;
  while (i < speech.size()) {
    std::size_t j = i;
    while (j < speech.size() && speech[j] == speech[i]) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(speech[i]) + "x" + std::to_string(j - i);
    i = j;
  }
  return out.empty() ? "-" : out;
}

std::vector<std::uint8_t> DecodeSpeech(std::string_view text) {
  std::vector<std::uint8_t> out;
  if (text == "-") return out;
  for (std::string_view run : io::Split(text, ',')) {
    auto parts = io::Split(run, 'x');
    if (parts.size() != 2 || (parts[0] != "0" && parts[0] != "1")) {
      throw ParseError("bad speech run '" + std::string(run) + "'");
    }
    out.insert(out.end(), io::ParseUint(parts[1]),
               static_cast<std::uint8_t>(parts[0] == "1"));
  }
  return out;
}

std::string EncodeTokens(const std::vector<TokenAlignment>& tokens) {
  if (tokens.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(tokens[i].id) + "@" +
           std::to_string(tokens[i].end_frame);
  }
  return out;
}

std::vector<TokenAlignment> DecodeTokens(std::string_view text) {
  std::vector<TokenAlignment> out;
  if (text == "-") return out;
  for (std::string_view item : io::Split(text, ',')) {
    auto parts = io::Split(item, '@');
    if (parts.size() != 2) {
      throw ParseError("bad token alignment '" + std::string(item) + "'");
    }
    out.push_back({static_cast<int>(io::ParseInt(parts[0])),
                   static_cast<std::size_t>(io::ParseUint(parts[1]))});
  }
  return out;
}

}  // namespace

TokenVocab::TokenVocab(std::vector<TokenClass> classes)
    : classes_(std::move(classes)) {
  const bool has_content =
      std::find(classes_.begin(), classes_.end(), TokenClass::kContent) !=
      classes_.end();
  const bool has_terminal =
      std::find(classes_.begin(), classes_.end(), TokenClass::kTerminal) !=
      classes_.end();
  if (!has_content || !has_terminal) {
    throw ConfigError(
        "vocabulary needs at least one content and one terminal token");
  }
}

TokenVocab TokenVocab::Make(std::size_t content, std::size_t terminal,
                            std::size_t filler) {
  std::vector<TokenClass> classes(content, TokenClass::kContent);
  classes.insert(classes.end(), terminal, TokenClass::kTerminal);
  classes.insert(classes.end(), filler, TokenClass::kFiller);
  return TokenVocab(std::move(classes));
}

TokenClass TokenVocab::ClassOf(int id) const {
  if (!Contains(id)) {
    throw IndexError("token id " + std::to_string(id) + " not in vocabulary");
  }
  return classes_[static_cast<std::size_t>(id)];
}

std::vector<int> TokenVocab::IdsOf(TokenClass cls) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i] == cls) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::string TokenVocab::Encode() const {
  std::string out;
  for (TokenClass c : classes_) {
    out += c == TokenClass::kContent ? 'c' : c == TokenClass::kTerminal ? 't' : 'f';
  }
  return out;
}

TokenVocab TokenVocab::Decode(std::string_view letters) {
  std::vector<TokenClass> classes;
  for (char c : letters) {
    switch (c) {
      case 'c': classes.push_back(TokenClass::kContent); break;
      case 't': classes.push_back(TokenClass::kTerminal); break;
      case 'f': classes.push_back(TokenClass::kFiller); break;
      default:
        throw ParseError(std::string("bad vocabulary class letter '") + c + "'");
    }
  }
  return TokenVocab(std::move(classes));
}

std::string_view CategoryName(Category category) {
  switch (category) {
    case Category::kHesitation: return "hesitation";
    case Category::kIncomplete: return "incomplete";
    case Category::kComplete: break;
  }
  return "complete";
}

Category ParseCategory(std::string_view name) {
  if (name == "complete") return Category::kComplete;
  if (name == "hesitation") return Category::kHesitation;
  if (name == "incomplete") return Category::kIncomplete;
  throw ParseError("unknown category '" + std::string(name) + "'");
}

std::vector<int> Utterance::TokenIds() const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const TokenAlignment& t : tokens) ids.push_back(t.id);
  return ids;
}

void Utterance::Validate(const TokenVocab& vocab) const {
  auto bad = [&](const std::string& what) {
    return ArgumentError("utterance '" + id + "': " + what);
  };
  if (num_frames == 0) throw bad("no frames");
  if (features.size() != num_frames * kFrameDim) throw bad("feature size mismatch");
  if (speech.size() != num_frames) throw bad("speech mask size mismatch");
  if (audio_end_frame != num_frames - 1) throw bad("audio_end_frame must be the last frame");
  if (eos_frame > audio_end_frame) throw bad("eos_frame beyond audio end");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!vocab.Contains(tokens[i].id)) throw bad("token id outside vocabulary");
    if (i > 0 && tokens[i].end_frame <= tokens[i - 1].end_frame) {
      throw bad("token end frames not strictly increasing");
    }
    if (tokens[i].end_frame > eos_frame) throw bad("token ends after eos_frame");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw bad("non-finite feature value");
  }
  if (category == Category::kIncomplete) {
    if (audio_end_frame - eos_frame > kMaxIncompleteTailFrames) {
      throw bad("incomplete utterance has more than 300ms after eos");
    }
    for (const TokenAlignment& t : tokens) {
      if (vocab.IsTerminal(t.id)) throw bad("incomplete utterance has a terminal token");
    }
  }
}

void GenConfig::Validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  need(vocab_content >= 1 && vocab_terminal >= 1, "vocabulary needs content and terminal tokens");
  need(tokens_min >= 2 && tokens_max >= tokens_min, "tokens_min/max must satisfy 2 <= min <= max");
  need(token_frames_min >= 1 && token_frames_max >= token_frames_min, "token_frames range invalid");
  need(lead_frames_min >= 1 && lead_frames_max >= lead_frames_min, "lead_frames range invalid");
  need(pause_frames_min >= 1 && pause_frames_max >= pause_frames_min, "pause_frames range invalid");
  need(gap_frames_max < pause_frames_min, "gap_frames_max must be below pause_frames_min");
  need(hesitation_tail_tokens >= 1, "hesitation_tail_tokens must be >= 1");
  need(trailing_frames_min >= kMinTrailingFrames && trailing_frames_max >= trailing_frames_min,
       "trailing_frames must be >= 67 (2s) with min <= max");
  need(incomplete_tail_min >= 1 && incomplete_tail_max >= incomplete_tail_min &&
           incomplete_tail_max <= kMaxIncompleteTailFrames,
       "incomplete tail must lie in [1, 10] frames");
  need(filler_prob >= 0.0 && filler_prob <= 1.0, "filler_prob must be in [0,1]");
  need(hesitation_filler_prob >= 0.0 && hesitation_filler_prob <= 1.0,
       "hesitation_filler_prob must be in [0,1]");
  need(noise_std >= 0.0 && std::isfinite(noise_std), "noise_std must be >= 0");
  need(loudness_min > 0.0 && loudness_min <= 1.0, "loudness_min must be in (0,1]");
  need(speech_mean > silence_mean, "speech_mean must exceed silence_mean");
}

Corpus GenerateCorpus(const GenConfig& config) {
  config.Validate();
  Corpus corpus;
  corpus.vocab = TokenVocab::Make(config.vocab_content, config.vocab_terminal,
                                  config.vocab_filler);
  const ClassPatterns patterns = MakePatterns(config);
  std::size_t index = 0;
  const std::array<std::pair<Category, std::size_t>, 3> plan = {{
      {Category::kComplete, config.num_complete},
      {Category::kHesitation, config.num_hesitation},
      {Category::kIncomplete, config.num_incomplete},
  }};
  for (const auto& [category, count] : plan) {
    for (std::size_t i = 0; i < count; ++i) {
      corpus.utterances.push_back(
          GenerateOne(config, patterns, corpus.vocab, category, index++));
      corpus.utterances.back().Validate(corpus.vocab);
    }
  }
  return corpus;
}

CorpusSplit SplitCorpus(const Corpus& corpus, const SplitFractions& fractions,
                        std::uint64_t seed) {
  const std::array<double, 3> f = {fractions.train, fractions.dev,
                                   fractions.test};
  for (double x : f) {
    if (!(x > 0.0)) throw ConfigError("split fractions must be positive");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  const std::size_t n = corpus.utterances.size();

  // Global split sizes by largest remainder.
  auto apportion = [&](double total) {
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (int s = 0; s < 3; ++s) {
      const double q = f[s] * total;
      sizes[s] = static_cast<std::size_t>(std::floor(q + 1e-9));
      rem[s] = q - static_cast<double>(sizes[s]);
      used += sizes[s];
    }
    const auto want = static_cast<std::size_t>(std::llround(total));
    while (used < want) {
      int best = 0;
      for (int s = 1; s < 3; ++s) if (rem[s] > rem[best]) best = s;
      ++sizes[best];
      rem[best] = -1.0;
      ++used;
    }
    return sizes;
  };
  std::array<std::size_t, 3> need = apportion(static_cast<double>(n));

  std::map<Category, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < n; ++i) {
    by_category[corpus.utterances[i].category].push_back(i);
  }

  std::array<std::vector<std::size_t>, 3> chosen;
  for (auto& [category, members] : by_category) {
    nn::Rng rng(io::DeriveSeed(seed, CategoryName(category), 0));
    for (std::size_t i = members.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(nn::Uniform01(rng) * static_cast<double>(i));
      std::swap(members[i - 1], members[std::min(j, i - 1)]);
    }
    const auto count = static_cast<double>(members.size());
    std::array<std::size_t, 3> take{};
    std::array<double, 3> frac{};
    std::size_t used = 0;
    for (int s = 0; s < 3; ++s) {
      const double q = f[s] * count;
      take[s] = std::min(need[s], static_cast<std::size_t>(std::floor(q + 1e-9)));
      frac[s] = q - static_cast<double>(take[s]);
      used += take[s];
    }
    std::array<bool, 3> bumped{};
    while (used < members.size()) {
      int best = -1;
      for (int pass = 0; pass < 2 && best < 0; ++pass) {
        for (int s = 0; s < 3; ++s) {
          if (need[s] - take[s] == 0 || (pass == 0 && bumped[s])) continue;
          if (best < 0 || need[s] - take[s] > need[best] - take[best] ||
              (need[s] - take[s] == need[best] - take[best] && frac[s] > frac[best])) {
            best = s;
          }
        }
      }
      if (best < 0) throw ConfigError("cannot apportion split");
      ++take[best];
      bumped[best] = true;
      ++used;
    }
    std::size_t at = 0;
    for (int s = 0; s < 3; ++s) {
      need[s] -= take[s];
      for (std::size_t k = 0; k < take[s]; ++k) chosen[s].push_back(members[at++]);
    }
  }

  CorpusSplit split;
  std::array<Corpus*, 3> outs = {&split.train, &split.dev, &split.test};
  for (int s = 0; s < 3; ++s) {
    std::sort(chosen[s].begin(), chosen[s].end());
    outs[s]->vocab = corpus.vocab;
    for (std::size_t i : chosen[s]) outs[s]->utterances.push_back(corpus.utterances[i]);
  }
  return split;
}

void SaveCorpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream meta;
  std::ostringstream payload;
  meta << "endgate-corpus 1\n";
  meta << "vocab " << corpus.vocab.Encode() << "\n";
  meta << "utterances " << corpus.utterances.size() << "\n";
  std::size_t offset = 0;
  for (const Utterance& u : corpus.utterances) {
    meta << "utt id=" << u.id << " category=" << CategoryName(u.category)
         << " frames=" << u.num_frames << " offset=" << offset
         << " eos=" << u.eos_frame << " audio_end=" << u.audio_end_frame
         << " tokens=" << EncodeTokens(u.tokens)
         << " speech=" << EncodeSpeech(u.speech) << "\n";
    io::WriteDoublesLE(payload, u.features);
    offset += u.num_frames;
  }
  io::WriteFileAtomic(dir / "features.bin", payload.str());
  io::WriteFileAtomic(dir / "corpus.txt", meta.str());
}

Corpus LoadCorpus(const std::filesystem::path& dir) {
  std::istringstream meta(io::ReadFile(dir / "corpus.txt"));
  const std::string payload_bytes = io::ReadFile(dir / "features.bin");
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return ParseError("corpus.txt line " + std::to_string(line_no) + ": " + what);
  };
  auto next = [&]() -> bool {
    if (!std::getline(meta, line)) return false;
    ++line_no;
    return true;
  };
  if (!next() || line != "endgate-corpus 1") throw fail("bad magic");
  Corpus corpus;
  std::size_t count = 0;
  try {
    if (!next()) throw fail("missing vocab record");
    auto fields = io::SplitWhitespace(line);
    if (fields.size() != 2 || fields[0] != "vocab") throw fail("expected 'vocab <classes>'");
    corpus.vocab = TokenVocab::Decode(fields[1]);
    if (!next()) throw fail("missing utterances record");
    fields = io::SplitWhitespace(line);
    if (fields.size() != 2 || fields[0] != "utterances") throw fail("expected 'utterances <n>'");
    count = io::ParseUint(fields[1]);
  } catch (const ParseError& e) {
    if (std::string(e.what()).rfind("corpus.txt", 0) == 0) throw;
    throw fail(e.what());
  } catch (const ConfigError& e) {
    throw fail(e.what());
  }

  std::istringstream payload(payload_bytes);
  std::size_t expected_offset = 0;
  for (std::size_t k = 0; k < count; ++k) {
    if (!next()) throw fail("expected " + std::to_string(count) + " utterance records");
    auto fields = io::SplitWhitespace(line);
    if (fields.empty() || fields[0] != "utt") throw fail("expected an 'utt' record");
    std::map<std::string, std::string> kv;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const std::size_t eq = fields[i].find('=');
      if (eq == std::string_view::npos) throw fail("field without '='");
      auto [it, inserted] = kv.emplace(std::string(fields[i].substr(0, eq)),
                                       std::string(fields[i].substr(eq + 1)));
      if (!inserted) throw fail("duplicate field '" + it->first + "'");
    }
    auto get = [&](const char* key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end()) throw fail(std::string("missing field '") + key + "'");
      return it->second;
    };
    Utterance u;
    try {
      u.id = get("id");
      u.category = ParseCategory(get("category"));
      u.num_frames = io::ParseUint(get("frames"));
      if (io::ParseUint(get("offset")) != expected_offset) throw fail("offset out of sequence");
      u.eos_frame = io::ParseUint(get("eos"));
      u.audio_end_frame = io::ParseUint(get("audio_end"));
      u.tokens = DecodeTokens(get("tokens"));
      u.speech = DecodeSpeech(get("speech"));
      if (kv.size() != 8) throw fail("unexpected extra fields");
      u.features = io::ReadDoublesLE(payload, u.num_frames * kFrameDim);
      u.Validate(corpus.vocab);
    } catch (const ParseError& e) {
      if (std::string(e.what()).rfind("corpus.txt", 0) == 0) throw;
      throw fail(e.what());
    } catch (const Error& e) {
      throw fail(e.what());
    }
    expected_offset += u.num_frames;
    corpus.utterances.push_back(std::move(u));
  }
  if (next()) throw fail("trailing content after last utterance");
  if (payload.peek() != std::char_traits<char>::eof()) {
    throw ParseError("features.bin has trailing bytes");
  }
  return corpus;
}

std::vector<std::pair<std::size_t, std::size_t>> SilenceRuns(
    const Utterance& utterance) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t t = 0;
  while (t < utterance.speech.size()) {
    if (utterance.speech[t]) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end < utterance.speech.size() && !utterance.speech[end]) ++end;
    runs.emplace_back(t, end);
    t = end;
  }
  return runs;
}

}  // namespace endgate
