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

#include <cmath>

#include "doctest.h"
#include "endgate/errors.h"
#include "endgate/firstpass.h"
#include "test_util.h"

namespace endgate {
namespace {

using testing::SharedModels;
using testing::SmallCorpus;

Utterance SilenceUtterance(std::size_t frames, std::uint64_t seed) {
  GenConfig g;
  nn::Rng rng(seed);
  Utterance u;
  u.id = "silence";
  u.num_frames = frames;
  for (std::size_t i = 0; i < frames * kFrameDim; ++i) {
    u.features.push_back(g.silence_mean + g.noise_std * nn::StandardNormal(rng));
  }
  u.speech.assign(frames, 0);
  u.eos_frame = 0;
  u.audio_end_frame = frames - 1;
  return u;
}

TEST_CASE("frame EP accuracy on dev is at least 0.90") {
  const auto& m = SharedModels();
  const double acc = FrameEpAccuracy(m.frame_model, m.split.dev);
  MESSAGE("dev frame EP accuracy " << acc);
  CHECK(acc >= 0.90);
}

TEST_CASE("VAD on pure silence stays below 0.2") {
  const auto& m = SharedModels();
  const Utterance u = SilenceUtterance(100, 3);
  double sum = 0.0;
  for (const auto& out : RunFrameModel(m.frame_model, u)) sum += out.vad;
  CHECK(sum / 100.0 < 0.2);
}

TEST_CASE("EP posterior rises across the end of speech") {
  const auto& m = SharedModels();
  std::size_t eligible = 0, rising = 0;
  for (const Utterance& u : m.split.dev.utterances) {
    if (u.category == Category::kIncomplete || u.eos_frame < 20) continue;
    const auto out = RunFrameModel(m.frame_model, u);
    ++eligible;
    rising += out[u.eos_frame + 10].ep > out[u.eos_frame - 20].ep;
  }
  REQUIRE(eligible > 50);
  MESSAGE(rising << " of " << eligible);
  CHECK(static_cast<double>(rising) >= 0.9 * static_cast<double>(eligible));
}

TEST_CASE("frame model is causal") {
  const auto& m = SharedModels();
  const Utterance& u = m.split.dev.utterances.front();
  const auto full = RunFrameModel(m.frame_model, u);
  Utterance prefix = u;
  const std::size_t cut = u.eos_frame;
  prefix.num_frames = cut;
  prefix.features.resize(cut * kFrameDim);
  prefix.speech.resize(cut);
  const auto part = RunFrameModel(m.frame_model, prefix);
  REQUIRE(part.size() == cut);
  for (std::size_t t = 0; t < cut; ++t) {
    CHECK(part[t].ep == full[t].ep);
    CHECK(part[t].vad == full[t].vad);
    CHECK(part[t].hidden == full[t].hidden);
  }
}

TEST_CASE("streaming evaluation equals windowed evaluation") {
  const auto& m = SharedModels();
  const Utterance& u = m.split.dev.utterances[1];
  FrameModelStream stream(m.frame_model);
  const std::size_t k = m.frame_model.config().window;
  for (std::size_t t = 0; t < 30; ++t) {
    const auto s = stream.Step(u.frame(t));
    std::vector<std::span<const double>> window;
    for (std::size_t j = t + 1 > k ? t + 1 - k : 0; j <= t; ++j) window.push_back(u.frame(j));
    const auto w = m.frame_model.Evaluate(window);
    CHECK(s.ep == doctest::Approx(w.ep).epsilon(1e-12));
    CHECK(s.vad == doctest::Approx(w.vad).epsilon(1e-12));
  }
  CHECK(stream.frames_seen() == 30);
}

TEST_CASE("frame model gradients match finite differences") {
  nn::Rng rng(2);
  FrameModelConfig cfg;
  cfg.window = 3;
  cfg.projection_dim = 4;
  cfg.hidden = {6, 5};
  FrameModel model(cfg, &rng);
  const Corpus c = SmallCorpus(1, 0, 1, 5);
  Utterance a = c.utterances[0];
  Utterance b = c.utterances[1];
  for (Utterance* u : {&a, &b}) {
    const std::size_t n = std::min<std::size_t>(u->num_frames, 14);
    if (u->category == Category::kIncomplete) {
      u->eos_frame = std::min(u->eos_frame, n - 3);
    } else {
      u->eos_frame = std::min(u->eos_frame, n - 4);
    }
    u->num_frames = n;
    u->features.resize(n * kFrameDim);
    u->speech.resize(n);
    u->audio_end_frame = n - 1;
  }
  nn::Vector mean(kFrameDim, -4.0), inv_std(kFrameDim, 0.5), pad(kFrameDim, -23.0);
  model.SetInputStats(mean, inv_std, pad);
  const FrameModel::Batch batch = {&a, &b};
  const double err = nn::GradCheckModel(model, batch, 1e-6);
  MESSAGE("relative error " << err);
  CHECK(err < 1e-4);
}

TEST_CASE("frame model checkpoint round trip") {
  const auto& m = SharedModels();
  const Checkpoint ck = m.frame_model.ToCheckpoint(4);
  CHECK(ck.kind == "frame_model");
  const FrameModel back = FrameModel::FromCheckpoint(ParseCheckpoint(SerializeCheckpoint(ck)));
  CHECK(back == m.frame_model);
  Checkpoint wrong = ck;
  wrong.kind = "arbitrator";
  CHECK_THROWS_AS(FrameModel::FromCheckpoint(wrong), ParseError);
}

TEST_CASE("training on an empty corpus is a dependency error") {
  CHECK_THROWS_AS(TrainFrameModel(Corpus{}, FrameModelConfig{}, nn::TrainConfig{}),
                  DependencyError);
}

TEST_CASE("acoustic candidate threshold is strict") {
  CHECK(AcousticCandidate(0.51, 0.5));
  CHECK_FALSE(AcousticCandidate(0.5, 0.5));
  CHECK_FALSE(AcousticCandidate(1.0, 1.0));
  CHECK(AcousticCandidate(1e-12, 0.0));
  CHECK_THROWS_AS(AcousticCandidate(0.5, 1.5), ArgumentError);
  CHECK_THROWS_AS(AcousticCandidate(0.5, -0.1), ArgumentError);
}

std::vector<DecoderEvent> Drain(const DecoderConfig& cfg, const Utterance& u, const TokenVocab& v) {
  DecoderSession s(cfg, u, v);
  for (std::size_t t = 0; t < u.num_frames; ++t) s.Step(t);
  return s.log();
}

TEST_CASE("decoder emits every token after it ends, in order") {
  const Corpus c = SmallCorpus(30, 20, 20);
  DecoderConfig cfg;
  for (const Utterance& u : c.utterances) {
    DecoderSession s(cfg, u, c.vocab);
    std::size_t emitted = 0;
    std::size_t last = 0;
    for (std::size_t t = 0; t < u.num_frames; ++t) {
      for (const auto& e : s.Step(t)) {
        CHECK(e.frame == t);
        if (e.kind != DecoderEvent::Kind::kToken) continue;
        CHECK(t >= u.tokens[emitted].end_frame);
        CHECK(t >= last);
        last = t;
        ++emitted;
      }
    }
    CHECK(s.hypothesis().size() <= u.tokens.size());
    CHECK(s.next_frame() == u.num_frames);
  }
}

TEST_CASE("substitutions follow the configured rate") {
  const Corpus c = SmallCorpus(200, 0, 0);
  DecoderConfig cfg;
  cfg.p_delay = 1.0;
  cfg.substitution_rate = 0.2;
  std::size_t total = 0, wrong = 0;
  for (const Utterance& u : c.utterances) {
    DecoderSession s(cfg, u, c.vocab);
    for (std::size_t t = 0; t < u.num_frames; ++t) s.Step(t);
    REQUIRE(s.hypothesis().size() == u.tokens.size());
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      ++total;
      wrong += s.hypothesis()[i] != u.tokens[i].id;
      CHECK(c.vocab.Contains(s.hypothesis()[i]));
    }
  }
  const double rate = static_cast<double>(wrong) / static_cast<double>(total);
  CHECK(rate > 0.15);
  CHECK(rate < 0.25);
}

TEST_CASE("decoder is deterministic and eos_scale only changes EOS events") {
  const Corpus c = SmallCorpus(10, 10, 10);
  DecoderConfig a;
  DecoderConfig b = a;
  b.eos_scale = 3.0;
  for (const Utterance& u : c.utterances) {
    CHECK(Drain(a, u, c.vocab) == Drain(a, u, c.vocab));
    auto tokens_of = [](const std::vector<DecoderEvent>& log) {
      std::vector<DecoderEvent> out;
      for (const auto& e : log) {
        if (e.kind == DecoderEvent::Kind::kToken) out.push_back(e);
      }
      return out;
    };
    CHECK(tokens_of(Drain(a, u, c.vocab)) == tokens_of(Drain(b, u, c.vocab)));
  }
}

TEST_CASE("doubling eos_scale strictly decreases mean EOS delay") {
  const Corpus c = SmallCorpus(1000, 0, 0, 21);
  auto mean_delay = [&](double scale) {
    DecoderConfig cfg;
    cfg.eos_scale = scale;
    double sum = 0.0;
    std::size_t n = 0;
    for (const Utterance& u : c.utterances) {
      for (const auto& e : Drain(cfg, u, c.vocab)) {
        if (e.kind == DecoderEvent::Kind::kEos && e.frame >= u.eos_frame) {
          sum += static_cast<double>(e.frame - u.eos_frame);
          ++n;
          break;
        }
      }
    }
    return sum / static_cast<double>(n);
  };
  const double d1 = mean_delay(0.5), d2 = mean_delay(1.0), d4 = mean_delay(2.0);
  MESSAGE("mean EOS delay " << d1 << " " << d2 << " " << d4);
  CHECK(d2 < d1);
  CHECK(d4 < d2);
}

TEST_CASE("false EOS needs speech followed by a long pause") {
  const Corpus c = SmallCorpus(50, 50, 0, 8);
  DecoderConfig cfg;
  cfg.false_eos_prob = 1.0;
  for (const Utterance& u : c.utterances) {
    std::size_t run = 0;
    bool speech = false;
    DecoderSession s(cfg, u, c.vocab);
    for (std::size_t t = 0; t < u.eos_frame; ++t) {
      if (u.speech[t]) {
        speech = true;
        run = 0;
      } else {
        ++run;
      }
      bool eos = false;
      for (const auto& e : s.Step(t)) eos |= e.kind == DecoderEvent::Kind::kEos;
      CHECK(eos == (speech && run > cfg.false_eos_min_pause));
    }
  }
}

TEST_CASE("decoder rejects out-of-order steps") {
  const Corpus c = SmallCorpus(1, 0, 0);
  const Utterance& u = c.utterances[0];
  DecoderSession s(DecoderConfig{}, u, c.vocab);
  CHECK_THROWS_AS(s.Step(1), ProtocolError);
  s.Step(0);
  CHECK_THROWS_AS(s.Step(0), ProtocolError);
  DecoderConfig bad;
  bad.p_delay = 0.0;
  CHECK_THROWS_AS(DecoderSession(bad, u, c.vocab), ConfigError);
}

TEST_CASE("guardrail fires on the limit-th consecutive non-speech frame") {
  Guardrail g(3);
  CHECK_FALSE(g.Step(0.1));
  CHECK_FALSE(g.Step(0.1));
  CHECK_FALSE(g.Step(0.9));
  CHECK(g.count() == 0);
  CHECK_FALSE(g.Step(0.49));
  CHECK_FALSE(g.Step(0.0));
  CHECK(g.Step(0.2));
  CHECK_FALSE(g.Step(0.5));
  CHECK(Guardrail().limit() == 58);
  CHECK_THROWS_AS(Guardrail(0), ConfigError);
}

}  // namespace
}  // namespace endgate
