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

#include "endgate/firstpass.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "endgate/errors.h"
#include "endgate/io.h"

namespace endgate {

namespace {

constexpr double kDefaultPadValue = -23.025850929940457;  // ln(1e-10)
constexpr double kInputClamp = 4.0;

bool EpLabelObservable(const Utterance& u, std::size_t t) {
  return !(u.category == Category::kIncomplete && t >= u.eos_frame);
}

nn::Tensor VectorTensor(const nn::Vector& v) { return nn::Tensor::FromVector(v); }

}  // namespace

void FrameModelConfig::Validate() const {
  if (window < 1) throw ConfigError("frame model window must be >= 1");
  if (projection_dim < 1) throw ConfigError("projection_dim must be >= 1");
  if (hidden.empty() || std::find(hidden.begin(), hidden.end(), 0u) != hidden.end()) {
    throw ConfigError("frame model hidden sizes must be non-empty and positive");
  }
}

FrameModel::FrameModel(const FrameModelConfig& config, nn::Rng* rng)
    : config_(config) {
  config_.Validate();
  projection_ = nn::DenseLayer(kFrameDim, config_.projection_dim, config_.activation);
  std::vector<std::size_t> dims = {config_.window * config_.projection_dim};
  dims.insert(dims.end(), config_.hidden.begin(), config_.hidden.end());
  trunk_ = nn::Mlp(dims, config_.activation, config_.activation);
  ep_head_ = nn::DenseLayer(trunk_.out_dim(), 2, nn::Activation::kIdentity);
  vad_head_ = nn::DenseLayer(trunk_.out_dim(), 2, nn::Activation::kIdentity);
  nn::XavierInit(&projection_, rng);
  trunk_.Init(rng);
  nn::XavierInit(&ep_head_, rng);
  nn::XavierInit(&vad_head_, rng);
  mean_.assign(kFrameDim, 0.0);
  inv_std_.assign(kFrameDim, 1.0);
  pad_.assign(kFrameDim, kDefaultPadValue);
}

void FrameModel::SetInputStats(nn::Vector mean, nn::Vector inv_std,
                               nn::Vector pad) {
  if (mean.size() != kFrameDim || inv_std.size() != kFrameDim ||
      pad.size() != kFrameDim) {
    throw DimensionError("input statistics must have 192 entries");
  }
  mean_ = std::move(mean);
  inv_std_ = std::move(inv_std);
  pad_ = std::move(pad);
}

nn::Vector FrameModel::Normalize(std::span<const double> frame) const {
  if (frame.size() != kFrameDim) {
    throw DimensionError("frame model expects 192-dim frames");
  }
  nn::Vector x(kFrameDim);
  for (std::size_t d = 0; d < kFrameDim; ++d) {
    x[d] = std::clamp((frame[d] - mean_[d]) * inv_std_[d], -kInputClamp, kInputClamp);
  }
  return x;
}

FrameModel::Output FrameModel::Evaluate(
    std::span<const std::span<const double>> window) const {
  const std::size_t k = config_.window;
  const std::size_t p = config_.projection_dim;
  if (window.size() > k) throw DimensionError("window longer than model context");
  nn::Vector concat;
  concat.reserve(k * p);
  const nn::Vector pad_proj = nn::DenseForward(projection_, Normalize(pad_));
  for (std::size_t j = window.size(); j < k; ++j) {
    concat.insert(concat.end(), pad_proj.begin(), pad_proj.end());
  }
  for (std::span<const double> frame : window) {
    const nn::Vector y = nn::DenseForward(projection_, Normalize(frame));
    concat.insert(concat.end(), y.begin(), y.end());
  }
  Output out;
  out.hidden = trunk_.Forward(concat);
  out.ep = nn::Softmax(nn::DenseForward(ep_head_, out.hidden))[1];
  out.vad = nn::Softmax(nn::DenseForward(vad_head_, out.hidden))[1];
  return out;
}

double FrameModel::Accumulate(const Batch& batch,
                              std::vector<nn::Tensor>* grads) const {
  const std::size_t k = config_.window;
  const std::size_t p = config_.projection_dim;
  std::size_t total_frames = 0;
  for (const Utterance* u : batch) total_frames += u->num_frames;
  if (total_frames == 0) throw DependencyError("frame model batch has no frames");
  const double scale = 1.0 / static_cast<double>(total_frames);

  std::span<nn::Tensor> g;
  if (grads) g = *grads;
  const std::size_t trunk_params = 2 * trunk_.num_layers();

  const nn::Vector pad_x = Normalize(pad_);
  const nn::Vector pad_y = nn::DenseForward(projection_, pad_x);
  nn::Vector pad_dy(p, 0.0);

  double loss = 0.0;
  nn::Mlp::Trace trace;
  for (const Utterance* u : batch) {
    const std::size_t n = u->num_frames;
    std::vector<nn::Vector> xs(n), ys(n);
    std::vector<nn::Vector> dys(grads ? n : 0, nn::Vector(p, 0.0));
    for (std::size_t t = 0; t < n; ++t) {
      xs[t] = Normalize(u->frame(t));
      ys[t] = nn::DenseForward(projection_, xs[t]);
    }
    nn::Vector concat(k * p);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + j) -
                                 static_cast<std::ptrdiff_t>(k - 1);
        const nn::Vector& y = s < 0 ? pad_y : ys[static_cast<std::size_t>(s)];
        std::copy(y.begin(), y.end(), concat.begin() + j * p);
      }
      const nn::Vector h = trunk_.Forward(concat, &trace);
      const nn::Vector ep_logits = nn::DenseForward(ep_head_, h);
      const nn::Vector vad_logits = nn::DenseForward(vad_head_, h);
      const nn::Vector ep_p = nn::Softmax(ep_logits);
      const nn::Vector vad_p = nn::Softmax(vad_logits);
      const bool ep_known = EpLabelObservable(*u, t);
      const std::size_t ep_label = t >= u->eos_frame ? 1 : 0;
      const std::size_t vad_label = u->speech[t] ? 1 : 0;
      const double ep_weight = ep_known ? 0.5 : 0.0;
      loss += scale * (ep_weight * nn::CrossEntropy(ep_p, ep_label) +
                       0.5 * nn::CrossEntropy(vad_p, vad_label));
      if (!grads) continue;

      nn::Vector d_ep = nn::SoftmaxCrossEntropyGrad(ep_p, ep_label);
      nn::Vector d_vad = nn::SoftmaxCrossEntropyGrad(vad_p, vad_label);
      for (double& v : d_ep) v *= scale * ep_weight;
      for (double& v : d_vad) v *= scale * 0.5;
      nn::Vector dh = nn::DenseBackward(ep_head_, h, ep_logits, d_ep,
                                        &g[2 + trunk_params],
                                        &g[3 + trunk_params]);
      const nn::Vector dh_vad = nn::DenseBackward(vad_head_, h, vad_logits, d_vad,
                                                  &g[4 + trunk_params],
                                                  &g[5 + trunk_params]);
      for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += dh_vad[i];
      const nn::Vector dconcat =
          trunk_.Backward(trace, dh, g.subspan(2, trunk_params));
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + j) -
                                 static_cast<std::ptrdiff_t>(k - 1);
        nn::Vector& dy = s < 0 ? pad_dy : dys[static_cast<std::size_t>(s)];
        for (std::size_t i = 0; i < p; ++i) dy[i] += dconcat[j * p + i];
      }
    }
    if (grads) {
      for (std::size_t t = 0; t < n; ++t) {
        nn::DenseBackward(projection_, xs[t], ys[t], dys[t], &g[0], &g[1]);
      }
    }
  }
  if (grads) nn::DenseBackward(projection_, pad_x, pad_y, pad_dy, &g[0], &g[1]);
  return loss;
}

double FrameModel::Loss(const Batch& batch) const { return Accumulate(batch, nullptr); }

double FrameModel::LossAndGrad(const Batch& batch,
                               std::vector<nn::Tensor>* grads) const {
  const std::vector<const nn::Tensor*> params = Parameters();
  *grads = nn::ZeroLike(params);
  return Accumulate(batch, grads);
}

std::vector<nn::Tensor*> FrameModel::Parameters() {
  std::vector<nn::Tensor*> out = {&projection_.weights, &projection_.bias};
  for (nn::Tensor* t : trunk_.Parameters()) out.push_back(t);
  for (nn::DenseLayer* head : {&ep_head_, &vad_head_}) {
    out.push_back(&head->weights);
    out.push_back(&head->bias);
  }
  return out;
}

std::vector<const nn::Tensor*> FrameModel::Parameters() const {
  std::vector<const nn::Tensor*> out = {&projection_.weights, &projection_.bias};
  for (const nn::Tensor* t : trunk_.Parameters()) out.push_back(t);
  for (const nn::DenseLayer* head : {&ep_head_, &vad_head_}) {
    out.push_back(&head->weights);
    out.push_back(&head->bias);
  }
  return out;
}

Checkpoint FrameModel::ToCheckpoint(std::uint64_t seed) const {
  Checkpoint c;
  c.kind = "frame_model";
  c.seed = seed;
  c.arch["window"] = std::to_string(config_.window);
  c.arch["projection_dim"] = std::to_string(config_.projection_dim);
  c.arch["activation"] = std::string(nn::ActivationName(config_.activation));
  std::string hidden;
  for (std::size_t i = 0; i < config_.hidden.size(); ++i) {
    if (i) hidden += ',';
    hidden += std::to_string(config_.hidden[i]);
  }
  c.arch["hidden"] = hidden;
  c.tensors.emplace_back("norm.mean", VectorTensor(mean_));
  c.tensors.emplace_back("norm.inv_std", VectorTensor(inv_std_));
  c.tensors.emplace_back("pad", VectorTensor(pad_));
  c.tensors.emplace_back("projection.w", projection_.weights);
  c.tensors.emplace_back("projection.b", projection_.bias);
  AddMlp(&c, "trunk", trunk_);
  c.tensors.emplace_back("ep_head.w", ep_head_.weights);
  c.tensors.emplace_back("ep_head.b", ep_head_.bias);
  c.tensors.emplace_back("vad_head.w", vad_head_.weights);
  c.tensors.emplace_back("vad_head.b", vad_head_.bias);
  return c;
}

FrameModel FrameModel::FromCheckpoint(const Checkpoint& c) {
  if (c.kind != "frame_model") {
    throw ParseError("checkpoint kind '" + c.kind + "' is not a frame model");
  }
  FrameModel m;
  m.config_.window = io::ParseUint(c.Arch("window"));
  m.config_.projection_dim = io::ParseUint(c.Arch("projection_dim"));
  m.config_.activation = nn::ParseActivation(c.Arch("activation"));
  m.config_.hidden.clear();
  for (std::string_view h : io::Split(c.Arch("hidden"), ',')) {
    m.config_.hidden.push_back(io::ParseUint(h));
  }
  m.config_.Validate();
  m.projection_ = nn::DenseLayer(c.Get("projection.w"), c.Get("projection.b"),
                                 m.config_.activation);
  m.trunk_ = GetMlp(c, "trunk");
  m.ep_head_ = nn::DenseLayer(c.Get("ep_head.w"), c.Get("ep_head.b"),
                              nn::Activation::kIdentity);
  m.vad_head_ = nn::DenseLayer(c.Get("vad_head.w"), c.Get("vad_head.b"),
                               nn::Activation::kIdentity);
  if (m.projection_.in_dim() != kFrameDim ||
      m.projection_.out_dim() != m.config_.projection_dim ||
      m.trunk_.in_dim() != m.config_.window * m.config_.projection_dim ||
      m.ep_head_.in_dim() != m.trunk_.out_dim() ||
      m.vad_head_.in_dim() != m.trunk_.out_dim() || m.ep_head_.out_dim() != 2 ||
      m.vad_head_.out_dim() != 2) {
    throw ParseError("frame model checkpoint shapes are inconsistent");
  }
  m.SetInputStats(c.Get("norm.mean").values(), c.Get("norm.inv_std").values(),
                  c.Get("pad").values());
  return m;
}

bool FrameModel::operator==(const FrameModel& other) const {
  return ToCheckpoint(0) == other.ToCheckpoint(0);
}

FrameModelStream::FrameModelStream(const FrameModel& model)
    : model_(model),
      pad_projection_(nn::DenseForward(model.projection_, model.Normalize(model.pad_))) {}

FrameModel::Output FrameModelStream::Step(std::span<const double> frame) {
  const std::size_t k = model_.config_.window;
  ring_.push_back(nn::DenseForward(model_.projection_, model_.Normalize(frame)));
  if (ring_.size() > k) ring_.pop_front();
  ++frames_seen_;
  nn::Vector concat;
  concat.reserve(k * model_.config_.projection_dim);
  for (std::size_t j = ring_.size(); j < k; ++j) {
    concat.insert(concat.end(), pad_projection_.begin(), pad_projection_.end());
  }
  for (const nn::Vector& y : ring_) concat.insert(concat.end(), y.begin(), y.end());
  FrameModel::Output out;
  out.hidden = model_.trunk_.Forward(concat);
  out.ep = nn::Softmax(nn::DenseForward(model_.ep_head_, out.hidden))[1];
  out.vad = nn::Softmax(nn::DenseForward(model_.vad_head_, out.hidden))[1];
  return out;
}

std::vector<FrameModel::Output> RunFrameModel(const FrameModel& model,
                                              const Utterance& utterance) {
  FrameModelStream stream(model);
  std::vector<FrameModel::Output> out;
  out.reserve(utterance.num_frames);
  for (std::size_t t = 0; t < utterance.num_frames; ++t) {
    out.push_back(stream.Step(utterance.frame(t)));
  }
  return out;
}

FrameModel TrainFrameModel(const Corpus& train, const FrameModelConfig& config,
                           const nn::TrainConfig& train_config) {
  train_config.Validate();
  config.Validate();
  if (train.utterances.empty()) {
    throw DependencyError("cannot train a frame model on an empty corpus");
  }
  std::vector<double> sum(kFrameDim, 0.0), sq(kFrameDim, 0.0);
  std::size_t frames = 0;
  for (const Utterance& u : train.utterances) {
    for (std::size_t t = 0; t < u.num_frames; ++t) {
      std::span<const double> f = u.frame(t);
      for (std::size_t d = 0; d < kFrameDim; ++d) {
        sum[d] += f[d];
        sq[d] += f[d] * f[d];
      }
      ++frames;
    }
  }
  nn::Vector mean(kFrameDim), inv_std(kFrameDim);
  nn::Vector pad(kFrameDim, kDefaultPadValue);
  for (std::size_t d = 0; d < kFrameDim; ++d) {
    mean[d] = sum[d] / static_cast<double>(frames);
    const double var = std::max(0.0, sq[d] / static_cast<double>(frames) - mean[d] * mean[d]);
    inv_std[d] = 1.0 / std::max(std::sqrt(var), 1e-6);
  }

  nn::Rng rng(train_config.seed);
  FrameModel model(config, &rng);
  model.SetInputStats(std::move(mean), std::move(inv_std), std::move(pad));

  std::vector<std::size_t> order(train.utterances.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<nn::Tensor> grads;
  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(nn::Uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
      FrameModel::Batch batch;
      for (std::size_t i = start; i < std::min(order.size(), start + train_config.batch_size); ++i) {
        batch.push_back(&train.utterances[order[i]]);
      }
      model.LossAndGrad(batch, &grads);
      std::vector<nn::Tensor*> params = model.Parameters();
      nn::SgdStep(params, grads, train_config);
    }
  }
  return model;
}

double FrameEpAccuracy(const FrameModel& model, const Corpus& corpus) {
  std::size_t correct = 0, total = 0;
  for (const Utterance& u : corpus.utterances) {
    const std::vector<FrameModel::Output> out = RunFrameModel(model, u);
    for (std::size_t t = 0; t < u.num_frames; ++t) {
      if (!EpLabelObservable(u, t)) continue;
      const bool predicted = out[t].ep > 0.5;
      const bool label = t >= u.eos_frame;
      correct += predicted == label;
      ++total;
    }
  }
  if (total == 0) throw UndefinedMetricError("no labelled frames for EP accuracy");
  return static_cast<double>(correct) / static_cast<double>(total);
}

bool AcousticCandidate(double ep_posterior, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ArgumentError("T_EP must lie in [0, 1]");
  }
  return ep_posterior > threshold;
}

void DecoderConfig::Validate() const {
  auto prob = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError(std::string(name) + " must lie in [0, 1]");
    }
  };
  prob(p_delay, "p_delay");
  if (p_delay == 0.0) throw ConfigError("p_delay must be > 0");
  prob(substitution_rate, "substitution_rate");
  prob(eos_prob, "eos_prob");
  prob(false_eos_prob, "false_eos_prob");
  if (!(eos_scale >= 0.0) || !std::isfinite(eos_scale)) {
    throw ConfigError("eos_scale must be >= 0");
  }
}

DecoderSession::DecoderSession(const DecoderConfig& config,
                               const Utterance& utterance,
                               const TokenVocab& vocab)
    : config_(config),
      utterance_(utterance),
      eos_id_(vocab.eos_id()),
      eos_rng_(io::DeriveSeed(config.seed, utterance.id, 2)) {
  config_.Validate();
  nn::Rng token_rng(io::DeriveSeed(config.seed, utterance.id, 1));
  const auto vocab_size = static_cast<int>(vocab.size());
  std::size_t previous = 0;
  for (const TokenAlignment& tok : utterance.tokens) {
    // Three draws per token.
    const double u_delay = nn::Uniform01(token_rng);
    const double u_sub = nn::Uniform01(token_rng);
    const double u_pick = nn::Uniform01(token_rng);
    std::size_t delay = 0;
    if (config_.p_delay < 1.0) {
      delay = static_cast<std::size_t>(
          std::floor(std::log1p(-u_delay) / std::log1p(-config_.p_delay)));
    }
    int id = tok.id;
    if (vocab_size > 1 && u_sub < config_.substitution_rate) {
      int r = static_cast<int>(u_pick * (vocab_size - 1));
      r = std::min(r, vocab_size - 2);
      id = r >= tok.id ? r + 1 : r;
    }
    previous = std::max(previous, tok.end_frame + delay);
    emit_frame_.push_back(previous);
    emit_id_.push_back(id);
  }
}

double DecoderSession::EosProbability(std::size_t t) const {
  const std::size_t n = emit_frame_.size();
  if (t >= utterance_.eos_frame) {
    const bool all_emitted = next_token_ == n && (n == 0 || emit_frame_.back() < t);
    return all_emitted ? std::min(1.0, config_.eos_prob * config_.eos_scale) : 0.0;
  }
  if (seen_speech_ && silence_run_ > config_.false_eos_min_pause) {
    return std::min(1.0, config_.false_eos_prob * config_.eos_scale);
  }
  return 0.0;
}

std::vector<DecoderEvent> DecoderSession::Step(std::size_t t) {
  if (t != next_frame_) {
    throw ProtocolError("decoder expected frame " + std::to_string(next_frame_) +
                        ", got " + std::to_string(t));
  }
  if (t >= utterance_.num_frames) {
    throw ProtocolError("decoder stepped past the end of the utterance");
  }
  ++next_frame_;
  if (utterance_.speech[t]) {
    seen_speech_ = true;
    silence_run_ = 0;
  } else {
    ++silence_run_;
  }
  std::vector<DecoderEvent> events;
  while (next_token_ < emit_frame_.size() && emit_frame_[next_token_] <= t) {
    hypothesis_.push_back(emit_id_[next_token_]);
    events.push_back({t, DecoderEvent::Kind::kToken, emit_id_[next_token_]});
    ++next_token_;
  }
  const double u = nn::Uniform01(eos_rng_);
  if (u < EosProbability(t)) {
    events.push_back({t, DecoderEvent::Kind::kEos, eos_id_});
    if (!first_eos_frame_) first_eos_frame_ = t;
  }
  log_.insert(log_.end(), events.begin(), events.end());
  return events;
}

void WriteDecoderTrace(std::ostream& out, const std::string& utterance_id,
                       std::span<const DecoderEvent> events) {
  for (const DecoderEvent& e : events) {
    out << utterance_id << ' ' << e.frame << ' ';
    if (e.kind == DecoderEvent::Kind::kEos) {
      out << "eos\n";
    } else {
      out << "token " << e.token << '\n';
    }
  }
}

Guardrail::Guardrail(std::size_t limit_frames) : limit_(limit_frames) {
  if (limit_ == 0) throw ConfigError("guardrail limit must be >= 1 frame");
}

bool Guardrail::Step(double vad_posterior) {
  if (vad_posterior < kVadSpeechThreshold) {
    ++count_;
  } else {
    count_ = 0;
  }
  return count_ == limit_;
}

}  // namespace endgate
