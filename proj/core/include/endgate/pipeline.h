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

#ifndef ENDGATE_PIPELINE_H_
#define ENDGATE_PIPELINE_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "endgate/arbitrator.h"
#include "endgate/corpus.h"
#include "endgate/firstpass.h"

namespace endgate {

enum class FirstPass : std::uint8_t { kAcousticOnly, kE2eOnly, kBoth };
std::string_view FirstPassName(FirstPass first_pass);
FirstPass ParseFirstPass(std::string_view name);

enum class Source : std::uint8_t { kNone, kAcoustic, kE2e, kGuardrail };
std::string_view SourceName(Source source);
Source ParseSource(std::string_view name);

struct PipelineConfig {
  FirstPass first_pass = FirstPass::kBoth;
  bool use_arbitrator = false;
  double t_ep = 0.5;
  double t_arb = 0.5;
  std::size_t guardrail_frames = kGuardrailFrames;
  // The decoder always runs; first_pass only decides whether its EOS events
  // are candidates.
  DecoderConfig decoder;

  bool acoustic_enabled() const { return first_pass != FirstPass::kE2eOnly; }
  bool e2e_enabled() const { return first_pass != FirstPass::kAcousticOnly; }
  void Validate() const;
};

struct RejectedCandidate {
  std::size_t frame = 0;
  Source source = Source::kAcoustic;
  double p_arb = 0.0;

  bool operator==(const RejectedCandidate& other) const = default;
};

struct EndpointDecision {
  std::string utterance_id;
  Category category = Category::kComplete;
  std::size_t eos_frame = 0;
  std::size_t audio_end_frame = 0;
  std::optional<std::size_t> ep_frame;
  Source source = Source::kNone;
  // Accepted by the arbitrator after at least one rejection.
  bool arbitrated = false;
  std::vector<RejectedCandidate> rejected;
  std::vector<int> reference;
  // Tokens emitted up to and including ep_frame (all tokens when undecided).
  std::vector<int> hypothesis;

  std::optional<long> latency_ms() const;
  bool early() const;          // ep_frame < eos_frame
  bool early_partial() const;  // ep_frame < audio_end_frame

  bool operator==(const EndpointDecision& other) const = default;
};

struct Models {
  const FrameModel* frame_model = nullptr;
  const ArbitratorModel* arbitrator = nullptr;
};

// Per-frame endpointing state machine shared by streaming and replay.
class EndpointSession {
 public:
  struct Event {
    enum class Kind : std::uint8_t { kToken, kEos, kCandidate, kReject, kAccept, kGuardrail };
    std::size_t frame = 0;
    Kind kind = Kind::kToken;
    int token = -1;
    Source source = Source::kNone;
    double p_arb = 0.0;
  };

  EndpointSession(const PipelineConfig& config, const ArbitratorModel* arbitrator,
                  const Utterance& utterance, bool record_events = false);

  // Consumes frame t; returns true once a decision is final.
  bool Step(std::size_t t, const FrameModel::Output& frame,
            std::span<const DecoderEvent> decoder_events);
  bool done() const { return done_; }
  // Finalizes (undecided if no decision was reached) and returns the result.
  EndpointDecision Finish();
  const std::vector<Event>& events() const { return events_; }
  const TextEmbeddingCache& cache() const { return cache_; }

 private:
  void Finalize(std::size_t t, Source source);

  const PipelineConfig& config_;
  const ArbitratorModel* arbitrator_;
  const Utterance& utterance_;
  bool record_;
  Guardrail guardrail_;
  nn::RunningMax pooled_;
  TextEmbeddingCache cache_;
  std::vector<int> hypothesis_;
  EndpointDecision decision_;
  std::vector<Event> events_;
  std::size_t next_frame_ = 0;
  bool done_ = false;
};

// Fully streaming: frame model and decoder advance one frame at a time and
// stop at the decision. Throws DependencyError when a required model is
// missing.
EndpointDecision RunUtterance(const Utterance& utterance, const TokenVocab& vocab,
                              const Models& models, const PipelineConfig& config,
                              std::vector<EndpointSession::Event>* events = nullptr);

// Replays precomputed per-frame model outputs and the full decoder log.
EndpointDecision ReplayUtterance(const Utterance& utterance,
                                 std::span<const FrameModel::Output> outputs,
                                 std::span<const DecoderEvent> decoder_log,
                                 const ArbitratorModel* arbitrator,
                                 const PipelineConfig& config,
                                 std::vector<EndpointSession::Event>* events = nullptr);

// Full decoder log for an utterance, every frame stepped.
std::vector<DecoderEvent> DecoderLog(const Utterance& utterance, const TokenVocab& vocab,
                                     const DecoderConfig& config);

// Decisions in utterance-id order.
std::vector<EndpointDecision> RunCorpus(const Corpus& corpus, const Models& models,
                                        const PipelineConfig& config, std::size_t jobs,
                                        std::vector<std::vector<EndpointSession::Event>>* traces = nullptr);

void WriteEventTrace(std::ostream& out, const std::string& utterance_id,
                     std::span<const EndpointSession::Event> events);

void WriteDecisions(std::ostream& out, std::span<const EndpointDecision> decisions);
std::string SerializeDecisions(std::span<const EndpointDecision> decisions);
std::vector<EndpointDecision> ParseDecisions(std::string_view text);
void WriteDecisionFile(const std::filesystem::path& path,
                       std::span<const EndpointDecision> decisions);
std::vector<EndpointDecision> ReadDecisionFile(const std::filesystem::path& path);

}  // namespace endgate

#endif  // ENDGATE_PIPELINE_H_
