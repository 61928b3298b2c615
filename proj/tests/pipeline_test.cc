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

#include <sstream>

#include "doctest.h"
#include "endgate/errors.h"
#include "endgate/pipeline.h"
#include "test_util.h"

namespace endgate {
namespace {

using testing::SharedModels;

PipelineConfig Config(FirstPass fp, bool arb, double t_arb = 0.5) {
  PipelineConfig c;
  c.first_pass = fp;
  c.use_arbitrator = arb;
  c.t_arb = t_arb;
  c.decoder = SharedModels().config.decoder;
  return c;
}

std::vector<EndpointDecision> Run(const PipelineConfig& c, std::size_t jobs = 1) {
  const auto& m = SharedModels();
  return RunCorpus(m.split.dev, {&m.frame_model, &m.arbitrator}, c, jobs);
}

TEST_CASE("pipeline config validation names the offending threshold") {
  PipelineConfig c;
  c.t_ep = 1.5;
  try {
    c.Validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("T_EP") != std::string::npos);
  }
  c = PipelineConfig{};
  c.t_arb = -0.1;
  CHECK_THROWS_WITH_AS(c.Validate(), doctest::Contains("T_arb"), ConfigError);
  CHECK(ParseFirstPass(FirstPassName(FirstPass::kE2eOnly)) == FirstPass::kE2eOnly);
  CHECK_THROWS_AS(ParseFirstPass("neither"), ConfigError);
}

TEST_CASE("streaming and replay give identical decisions") {
  const auto& m = SharedModels();
  for (bool arb : {false, true}) {
    for (FirstPass fp : {FirstPass::kAcousticOnly, FirstPass::kE2eOnly, FirstPass::kBoth}) {
      const PipelineConfig c = Config(fp, arb);
      for (std::size_t i = 0; i < 20; ++i) {
        const Utterance& u = m.split.dev.utterances[i];
        const auto outputs = RunFrameModel(m.frame_model, u);
        const auto log = DecoderLog(u, m.split.dev.vocab, c.decoder);
        const EndpointDecision streamed =
            RunUtterance(u, m.split.dev.vocab, {&m.frame_model, &m.arbitrator}, c);
        const EndpointDecision replayed = ReplayUtterance(u, outputs, log, &m.arbitrator, c);
        CHECK(streamed == replayed);
      }
    }
  }
}

TEST_CASE("corpus runs are independent of the worker count") {
  const PipelineConfig c = Config(FirstPass::kBoth, true);
  CHECK(SerializeDecisions(Run(c, 1)) == SerializeDecisions(Run(c, 3)));
}

TEST_CASE("baseline decides at the first candidate or the guardrail") {
  const auto& m = SharedModels();
  const PipelineConfig c = Config(FirstPass::kBoth, false);
  for (std::size_t i = 0; i < 40; ++i) {
    const Utterance& u = m.split.dev.utterances[i];
    const auto outputs = RunFrameModel(m.frame_model, u);
    const auto log = DecoderLog(u, m.split.dev.vocab, c.decoder);
    std::optional<std::size_t> expected;
    Source source = Source::kNone;
    std::size_t silent = 0;
    for (std::size_t t = 0; t < u.num_frames && !expected; ++t) {
      silent = outputs[t].vad < kVadSpeechThreshold ? silent + 1 : 0;
      bool eos = false;
      for (const auto& e : log) eos |= e.frame == t && e.kind == DecoderEvent::Kind::kEos;
      if (silent == kGuardrailFrames) {
        expected = t;
        source = Source::kGuardrail;
      } else if (eos) {
        expected = t;
        source = Source::kE2e;
      } else if (outputs[t].ep > c.t_ep) {
        expected = t;
        source = Source::kAcoustic;
      }
    }
    const EndpointDecision d = ReplayUtterance(u, outputs, log, nullptr, c);
    CHECK(d.ep_frame == expected);
    CHECK(d.source == source);
    CHECK_FALSE(d.arbitrated);
    CHECK(d.rejected.empty());
  }
}

TEST_CASE("first-pass configurations restrict candidate sources") {
  for (const auto& d : Run(Config(FirstPass::kAcousticOnly, false))) {
    CHECK(d.source != Source::kE2e);
  }
  for (const auto& d : Run(Config(FirstPass::kE2eOnly, false))) {
    CHECK(d.source != Source::kAcoustic);
  }
}

TEST_CASE("arbitration never endpoints earlier than the baseline") {
  const auto base = Run(Config(FirstPass::kBoth, false));
  const auto arb = Run(Config(FirstPass::kBoth, true));
  REQUIRE(base.size() == arb.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (!arb[i].ep_frame) continue;
    REQUIRE(base[i].ep_frame);
    CHECK(*arb[i].ep_frame >= *base[i].ep_frame);
  }
}

TEST_CASE("endpoint frame is monotone in T_arb") {
  std::vector<std::vector<EndpointDecision>> runs;
  for (double t : {0.0, 0.05, 0.2, 0.5, 0.8, 0.95, 1.0}) runs.push_back(Run(Config(FirstPass::kBoth, true, t)));
  for (std::size_t k = 1; k < runs.size(); ++k) {
    for (std::size_t i = 0; i < runs[k].size(); ++i) {
      const auto& lo = runs[k - 1][i];
      const auto& hi = runs[k][i];
      if (!lo.ep_frame) {
        CHECK_FALSE(hi.ep_frame);
      } else if (hi.ep_frame) {
        CHECK(*hi.ep_frame >= *lo.ep_frame);
      }
    }
  }
}

TEST_CASE("T_arb = 0 reproduces the baseline and T_arb = 1 leaves only the guardrail") {
  const auto base = Run(Config(FirstPass::kBoth, false));
  CHECK(SerializeDecisions(Run(Config(FirstPass::kBoth, true, 0.0))) == SerializeDecisions(base));
  for (const auto& d : Run(Config(FirstPass::kBoth, true, 1.0))) {
    if (d.category == Category::kIncomplete) continue;
    CHECK(d.source == Source::kGuardrail);
  }
}

TEST_CASE("hypothesis at the decision holds the tokens emitted so far") {
  const auto& m = SharedModels();
  const PipelineConfig c = Config(FirstPass::kBoth, true);
  for (std::size_t i = 0; i < 20; ++i) {
    const Utterance& u = m.split.dev.utterances[i];
    const auto log = DecoderLog(u, m.split.dev.vocab, c.decoder);
    const EndpointDecision d = RunUtterance(u, m.split.dev.vocab, {&m.frame_model, &m.arbitrator}, c);
    std::vector<int> expected;
    const std::size_t until = d.ep_frame ? *d.ep_frame : u.num_frames;
    for (const auto& e : log) {
      if (e.kind == DecoderEvent::Kind::kToken && e.frame <= until) expected.push_back(e.token);
    }
    CHECK(d.hypothesis == expected);
    CHECK(d.reference == u.TokenIds());
    for (const auto& r : d.rejected) {
      CHECK(r.p_arb <= c.t_arb);
      if (d.ep_frame) CHECK(r.frame < *d.ep_frame);
    }
    if (d.arbitrated) CHECK_FALSE(d.rejected.empty());
  }
}

TEST_CASE("missing models are dependency errors") {
  const auto& m = SharedModels();
  const Utterance& u = m.split.dev.utterances.front();
  CHECK_THROWS_AS(RunUtterance(u, m.split.dev.vocab, {&m.frame_model, nullptr},
                               Config(FirstPass::kBoth, true)),
                  DependencyError);
  CHECK_THROWS_AS(RunUtterance(u, m.split.dev.vocab, {nullptr, nullptr},
                               Config(FirstPass::kBoth, false)),
                  DependencyError);
}

TEST_CASE("session enforces frame order") {
  const auto& m = SharedModels();
  const PipelineConfig c = Config(FirstPass::kBoth, false);
  const Utterance& u = m.split.dev.utterances.front();
  EndpointSession s(c, nullptr, u);
  FrameModel::Output out;
  out.hidden.assign(m.frame_model.hidden_dim(), 0.0);
  out.vad = 1.0;
  CHECK_THROWS_AS(s.Step(1, out, {}), ProtocolError);
  CHECK_FALSE(s.Step(0, out, {}));
  out.ep = 1.0;
  CHECK(s.Step(1, out, {}));
  CHECK_THROWS_AS(s.Step(2, out, {}), ProtocolError);
  const EndpointDecision d = s.Finish();
  CHECK(d.ep_frame == std::optional<std::size_t>(1));
  CHECK(d.source == Source::kAcoustic);
}

TEST_CASE("latency and early flags") {
  EndpointDecision d;
  d.eos_frame = 10;
  d.audio_end_frame = 12;
  CHECK_FALSE(d.latency_ms());
  CHECK_FALSE(d.early());
  d.ep_frame = 11;
  CHECK(*d.latency_ms() == 30);
  CHECK_FALSE(d.early());
  CHECK(d.early_partial());
  d.ep_frame = 7;
  CHECK(*d.latency_ms() == -90);
  CHECK(d.early());
}

TEST_CASE("decision file round trip") {
  testing::TempDir dir;
  const auto decisions = Run(Config(FirstPass::kBoth, true, 0.7));
  WriteDecisionFile(dir / "d.txt", decisions);
  CHECK(ReadDecisionFile(dir / "d.txt") == decisions);
  CHECK(SerializeDecisions(ParseDecisions(SerializeDecisions(decisions))) ==
        SerializeDecisions(decisions));
}

TEST_CASE("decision parser reports the failing line") {
  const auto decisions = Run(Config(FirstPass::kBoth, false));
  std::string text = SerializeDecisions(std::span(decisions).first(3));
  CHECK_THROWS_WITH_AS(ParseDecisions("bogus\n"), doctest::Contains("line"), ParseError);
  std::string bad = text;
  const auto pos = bad.find("latency_ms=", bad.find("utt ", bad.find("utt ") + 1));
  bad.replace(pos, 11, "latency_ms=9");
  CHECK_THROWS_WITH_AS(ParseDecisions(bad), doctest::Contains("decisions line 4"), ParseError);
  std::string truncated = text.substr(0, text.rfind("utt "));
  CHECK_THROWS_AS(ParseDecisions(truncated), ParseError);
}

TEST_CASE("event trace records candidates and decisions") {
  const auto& m = SharedModels();
  const PipelineConfig c = Config(FirstPass::kBoth, true);
  const Utterance& u = m.split.dev.utterances.front();
  std::vector<EndpointSession::Event> events;
  const EndpointDecision d = RunUtterance(u, m.split.dev.vocab, {&m.frame_model, &m.arbitrator}, c, &events);
  REQUIRE_FALSE(events.empty());
  std::size_t rejects = 0;
  for (const auto& e : events) rejects += e.kind == EndpointSession::Event::Kind::kReject;
  CHECK(rejects == d.rejected.size());
  std::ostringstream out;
  WriteEventTrace(out, u.id, events);
  CHECK(out.str().find(u.id) == 0);
}

}  // namespace
}  // namespace endgate
