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

#ifndef ENDGATE_ARBITRATOR_H_
#define ENDGATE_ARBITRATOR_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "endgate/checkpoint.h"
#include "endgate/corpus.h"
#include "endgate/firstpass.h"
#include "endgate/nnkit.h"

namespace endgate {

struct ArbitratorConfig {
  std::size_t acoustic_dim = 16;       // A
  std::size_t text_embedding_dim = 16;
  std::size_t text_dim = 16;           // B
  std::vector<std::size_t> fusion_hidden = {16};
  nn::Activation activation = nn::Activation::kTanh;

  void Validate() const;
};

// Per-utterance memo of text encodings keyed by the full hypothesis.
class TextEmbeddingCache {
 public:
  const nn::Vector* Find(const std::vector<int>& tokens);
  const nn::Vector& Insert(const std::vector<int>& tokens, nn::Vector value);
  void Clear();

  std::size_t hits() const { return hits_; }
  std::size_t evaluations() const { return evaluations_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::vector<int>, nn::Vector> entries_;
  std::size_t hits_ = 0;
  std::size_t evaluations_ = 0;
};

// One training or scoring example: the running max of the frame-model hidden
// stream up to frame t, the hypothesis at t and the label [t >= eos_frame].
struct ArbitratorExample {
  nn::Vector pooled_hidden;
  std::vector<int> tokens;
  std::size_t label = 0;
};

struct ArbitrationResult {
  double p_arb = 0.0;
  bool accept = false;
};

class ArbitratorModel {
 public:
  using Batch = std::vector<const ArbitratorExample*>;

  ArbitratorModel() = default;
  // `vocab_size` counts speech tokens; one extra sentinel row encodes the
  // empty hypothesis.
  ArbitratorModel(const ArbitratorConfig& config, std::size_t hidden_dim,
                  std::size_t vocab_size, nn::Rng* rng);

  const ArbitratorConfig& config() const { return config_; }
  std::size_t hidden_dim() const { return acoustic_.in_dim(); }
  std::size_t vocab_size() const { return embedding_.vocab_size() - 1; }
  int sentinel_id() const { return static_cast<int>(vocab_size()); }

  // Throws ArgumentError on an empty stream.
  nn::Vector AcousticEncode(std::span<const nn::Vector> hidden_stream) const;
  nn::Vector AcousticEncodePooled(std::span<const double> pooled) const;
  // Throws IndexError for ids outside the speech vocabulary.
  nn::Vector TextEncode(const std::vector<int>& tokens) const;
  nn::Vector TextEncode(const std::vector<int>& tokens,
                        TextEmbeddingCache* cache) const;

  double Posterior(std::span<const double> acoustic,
                   std::span<const double> text) const;
  // Strict: accept iff p_arb > threshold.
  ArbitrationResult Arbitrate(const nn::RunningMax& pooled_hidden,
                              const std::vector<int>& tokens,
                              TextEmbeddingCache* cache, double threshold) const;

  double Loss(const Batch& batch) const;
  double LossAndGrad(const Batch& batch, std::vector<nn::Tensor>* grads) const;

  std::vector<nn::Tensor*> Parameters();
  std::vector<const nn::Tensor*> Parameters() const;

  Checkpoint ToCheckpoint(std::uint64_t seed) const;
  static ArbitratorModel FromCheckpoint(const Checkpoint& checkpoint);

  bool operator==(const ArbitratorModel& other) const;

 private:
  double Accumulate(const Batch& batch, std::vector<nn::Tensor>* grads) const;

  ArbitratorConfig config_;
  nn::Mlp acoustic_;
  nn::EmbeddingTable embedding_;
  nn::Mlp text_;
  nn::Mlp fusion_;
};

struct ArbitratorSampling {
  std::size_t window_before = 20;
  std::size_t window_after = 20;
  std::size_t early_samples = 20;
};

// Training examples for one utterance: every frame in
// [eos - before, min(audio_end, eos + after)] plus `early_samples` distinct
// frames drawn uniformly from the frames after the first token emission and
// before that window. Post-eos frames of incomplete utterances are skipped.
std::vector<ArbitratorExample> SampleArbitratorExamples(
    const Utterance& utterance, const FrameModel& frame_model,
    const DecoderConfig& decoder, const TokenVocab& vocab,
    const ArbitratorSampling& sampling, nn::Rng* rng);

// Examples at every first-pass candidate frame (acoustic posterior above
// T_EP or decoder EOS), again skipping post-eos frames of incomplete
// utterances.
std::vector<ArbitratorExample> CandidateExamples(
    const Utterance& utterance, const FrameModel& frame_model,
    const DecoderConfig& decoder, const TokenVocab& vocab, double t_ep);

double ArbitratorAccuracy(const ArbitratorModel& model,
                          std::span<const ArbitratorExample> examples);

// Throws DependencyError when the frame model is untrained (no parameters),
// the corpus is empty, or no examples could be sampled.
ArbitratorModel TrainArbitrator(const Corpus& train,
                                const FrameModel& frame_model,
                                const DecoderConfig& decoder,
                                const ArbitratorConfig& config,
                                const nn::TrainConfig& train_config,
                                const ArbitratorSampling& sampling = {});

}  // namespace endgate

#endif  // ENDGATE_ARBITRATOR_H_
