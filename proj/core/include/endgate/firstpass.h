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

#ifndef ENDGATE_FIRSTPASS_H_
#define ENDGATE_FIRSTPASS_H_

// First-pass endpointing: the multi-task acoustic frame model, the simulated
// streaming E2E decoder, and the VAD pause-duration guardrail.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "endgate/checkpoint.h"
#include "endgate/corpus.h"
#include "endgate/nnkit.h"

namespace endgate {

struct FrameModelConfig {
  std::size_t window = 8;          // causal context in stacked frames
  std::size_t projection_dim = 8;  // per-frame projection shared over window
  std::vector<std::size_t> hidden = {32, 32};  // trunk; last entry is H
  nn::Activation activation = nn::Activation::kTanh;

  void Validate() const;
};

// Windowed feed-forward multi-task network. Each input frame is normalized
// and projected by a shared layer; the last `window` projections (left-padded
// with the projected silence-floor frame) feed a trunk whose final activation
// is the hidden embedding. Two binary softmax heads read the trunk: EP
// (P(EOS | x_1:t)) and VAD (P(speech)).
class FrameModel {
 public:
  struct Output {
    double ep = 0.0;
    double vad = 0.0;
    nn::Vector hidden;
  };

  // A batch is a set of utterances; every frame contributes VAD loss, and EP
  // loss unless the frame lies after eos of an incomplete utterance.
  using Batch = std::vector<const Utterance*>;

  FrameModel() = default;
  FrameModel(const FrameModelConfig& config, nn::Rng* rng);

  const FrameModelConfig& config() const { return config_; }
  // True for a default-constructed model with no parameters.
  bool empty() const { return trunk_.num_layers() == 0; }
  std::size_t hidden_dim() const { return trunk_.out_dim(); }

  // Normalization statistics and the pad frame are fit from data and are
  // not trained by SGD.
  void SetInputStats(nn::Vector mean, nn::Vector inv_std, nn::Vector pad);
  const nn::Vector& pad_frame() const { return pad_; }

  // Outputs for the frame at the end of `window` (oldest first, at most
  // config().window entries; shorter windows are left-padded).
  Output Evaluate(std::span<const std::span<const double>> window) const;

  double Loss(const Batch& batch) const;
  double LossAndGrad(const Batch& batch, std::vector<nn::Tensor>* grads) const;

  std::vector<nn::Tensor*> Parameters();
  std::vector<const nn::Tensor*> Parameters() const;

  Checkpoint ToCheckpoint(std::uint64_t seed) const;
  static FrameModel FromCheckpoint(const Checkpoint& checkpoint);

  bool operator==(const FrameModel& other) const;

 private:
  friend class FrameModelStream;

  nn::Vector Normalize(std::span<const double> frame) const;
  double Accumulate(const Batch& batch, std::vector<nn::Tensor>* grads) const;

  FrameModelConfig config_;
  nn::DenseLayer projection_;
  nn::Mlp trunk_;
  nn::DenseLayer ep_head_;
  nn::DenseLayer vad_head_;
  nn::Vector mean_;
  nn::Vector inv_std_;
  nn::Vector pad_;
};

// Causal per-frame evaluation: the projection of each frame is computed once
// and kept in a ring of size window.
class FrameModelStream {
 public:
  explicit FrameModelStream(const FrameModel& model);
  FrameModel::Output Step(std::span<const double> frame);
  std::size_t frames_seen() const { return frames_seen_; }

 private:
  const FrameModel& model_;
  nn::Vector pad_projection_;
  std::deque<nn::Vector> ring_;
  std::size_t frames_seen_ = 0;
};

std::vector<FrameModel::Output> RunFrameModel(const FrameModel& model,
                                              const Utterance& utterance);

// Trains on every utterance frame. EP label: t >= eos_frame; VAD label:
// generation-time speech mask. Throws DependencyError on an empty corpus.
FrameModel TrainFrameModel(const Corpus& train, const FrameModelConfig& config,
                           const nn::TrainConfig& train_config);

// Frame-level EP accuracy (posterior > 0.5 vs t >= eos) over frames with an
// observable label.
double FrameEpAccuracy(const FrameModel& model, const Corpus& corpus);

// Strict: fired iff posterior > threshold. threshold must lie in [0, 1].
bool AcousticCandidate(double ep_posterior, double threshold);

struct DecoderConfig {
  std::uint64_t seed = 11;
  double p_delay = 0.5;             // geometric emission delay parameter
  double substitution_rate = 0.05;  // epsilon
  double eos_prob = 0.25;           // q, per trailing-silence frame
  double false_eos_prob = 0.03;     // p_false, per frame of a long mid-pause
  std::size_t false_eos_min_pause = 6;  // m
  double eos_scale = 1.0;

  void Validate() const;
};

struct DecoderEvent {
  enum class Kind : std::uint8_t { kToken, kEos };
  std::size_t frame = 0;
  Kind kind = Kind::kToken;
  int token = -1;  // emitted id for kToken; vocabulary eos id for kEos

  bool operator==(const DecoderEvent& other) const = default;
};

// Seeded streaming decoder stand-in for one utterance. Token i of the
// reference is emitted d_i ~ Geometric(p_delay) frames after its end frame
// (never before the previous token), replaced by a random other token with
// probability substitution_rate. EOS draws use a separate random stream with
// one uniform per frame, so eos_scale changes only EOS events.
class DecoderSession {
 public:
  DecoderSession(const DecoderConfig& config, const Utterance& utterance,
                 const TokenVocab& vocab);

  // Advances to frame t; t must equal the number of frames already stepped.
  // Returns the events emitted at t.
  std::vector<DecoderEvent> Step(std::size_t t);

  const std::vector<int>& hypothesis() const { return hypothesis_; }
  bool eos_emitted() const { return first_eos_frame_.has_value(); }
  std::optional<std::size_t> first_eos_frame() const { return first_eos_frame_; }
  const std::vector<DecoderEvent>& log() const { return log_; }
  std::size_t next_frame() const { return next_frame_; }

 private:
  double EosProbability(std::size_t t) const;

  DecoderConfig config_;
  const Utterance& utterance_;
  int eos_id_;
  std::vector<std::size_t> emit_frame_;
  std::vector<int> emit_id_;
  nn::Rng eos_rng_;
  std::size_t next_token_ = 0;
  std::size_t next_frame_ = 0;
  std::size_t silence_run_ = 0;
  bool seen_speech_ = false;
  std::vector<int> hypothesis_;
  std::vector<DecoderEvent> log_;
  std::optional<std::size_t> first_eos_frame_;
};

// Line-oriented trace: "<utt> <frame> token <id>" / "<utt> <frame> eos".
void WriteDecoderTrace(std::ostream& out, const std::string& utterance_id,
                       std::span<const DecoderEvent> events);

inline constexpr std::size_t kGuardrailFrames = 58;  // 1740ms / 30ms
inline constexpr double kVadSpeechThreshold = 0.5;

// Counts consecutive non-speech frames (VAD posterior < 0.5) and fires when
// the count reaches the limit. A fire is final and bypasses arbitration.
class Guardrail {
 public:
  explicit Guardrail(std::size_t limit_frames = kGuardrailFrames);
  bool Step(double vad_posterior);
  std::size_t count() const { return count_; }
  std::size_t limit() const { return limit_; }

 private:
  std::size_t limit_;
  std::size_t count_ = 0;
};

}  // namespace endgate

#endif  // ENDGATE_FIRSTPASS_H_
