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

#include "endgate/arbitrator.h"

#include <algorithm>
#include <numeric>

#include "endgate/errors.h"
#include "endgate/io.h"

namespace endgate {

namespace {

struct FrameView {
  std::vector<FrameModel::Output> outputs;
  std::vector<int> hypothesis;          // final decoder hypothesis
  std::vector<std::size_t> hyp_length;  // hypothesis length after frame t
  std::vector<std::size_t> eos_frames;
};

FrameView ViewUtterance(const Utterance& u, const FrameModel& model,
                        const DecoderConfig& decoder, const TokenVocab& vocab) {
  FrameView view;
  view.outputs = RunFrameModel(model, u);
  DecoderSession session(decoder, u, vocab);
  view.hyp_length.reserve(u.num_frames);
  for (std::size_t t = 0; t < u.num_frames; ++t) {
    for (const DecoderEvent& e : session.Step(t)) {
      if (e.kind == DecoderEvent::Kind::kEos) view.eos_frames.push_back(t);
    }
    view.hyp_length.push_back(session.hypothesis().size());
  }
  view.hypothesis = session.hypothesis();
  return view;
}

bool LabelObservable(const Utterance& u, std::size_t t) {
  return !(u.category == Category::kIncomplete && t >= u.eos_frame);
}

// Builds examples at the given sorted frames.
std::vector<ArbitratorExample> ExamplesAt(const Utterance& u, const FrameView& view,
                                          const std::vector<std::size_t>& frames) {
  std::vector<ArbitratorExample> out;
  nn::RunningMax pooled;
  std::size_t next = 0;
  for (std::size_t t = 0; t < u.num_frames && next < frames.size(); ++t) {
    pooled.Update(view.outputs[t].hidden);
    if (frames[next] != t) continue;
    ++next;
    ArbitratorExample ex;
    ex.pooled_hidden = pooled.values();
    ex.tokens.assign(view.hypothesis.begin(),
                     view.hypothesis.begin() +
                         static_cast<std::ptrdiff_t>(view.hyp_length[t]));
    ex.label = t >= u.eos_frame ? 1 : 0;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

void ArbitratorConfig::Validate() const {
  if (acoustic_dim == 0 || text_embedding_dim == 0 || text_dim == 0) {
    throw ConfigError("arbitrator dimensions must be positive");
  }
  if (std::find(fusion_hidden.begin(), fusion_hidden.end(), 0u) != fusion_hidden.end()) {
    throw ConfigError("arbitrator fusion sizes must be positive");
  }
}

const nn::Vector* TextEmbeddingCache::Find(const std::vector<int>& tokens) {
  auto it = entries_.find(tokens);
  if (it == entries_.end()) return nullptr;
  ++hits_;
  return &it->second;
}

const nn::Vector& TextEmbeddingCache::Insert(const std::vector<int>& tokens,
                                             nn::Vector value) {
  ++evaluations_;
  return entries_.insert_or_assign(tokens, std::move(value)).first->second;
}

void TextEmbeddingCache::Clear() {
  entries_.clear();
  hits_ = 0;
  evaluations_ = 0;
}

ArbitratorModel::ArbitratorModel(const ArbitratorConfig& config,
                                 std::size_t hidden_dim, std::size_t vocab_size,
                                 nn::Rng* rng)
    : config_(config) {
  config_.Validate();
  if (hidden_dim == 0 || vocab_size == 0) {
    throw ConfigError("arbitrator needs a hidden stream and a vocabulary");
  }
  const std::vector<std::size_t> acoustic_dims = {hidden_dim, config_.acoustic_dim};
  const std::vector<std::size_t> text_dims = {config_.text_embedding_dim, config_.text_dim};
  std::vector<std::size_t> fusion_dims = {config_.acoustic_dim + config_.text_dim};
  fusion_dims.insert(fusion_dims.end(), config_.fusion_hidden.begin(),
                     config_.fusion_hidden.end());
  fusion_dims.push_back(2);
  acoustic_ = nn::Mlp(acoustic_dims, config_.activation, config_.activation);
  embedding_ = nn::EmbeddingTable(vocab_size + 1, config_.text_embedding_dim);
  text_ = nn::Mlp(text_dims, config_.activation, config_.activation);
  fusion_ = nn::Mlp(fusion_dims, config_.activation, nn::Activation::kIdentity);
  embedding_.Init(rng);
  acoustic_.Init(rng);
  text_.Init(rng);
  fusion_.Init(rng);
}

nn::Vector ArbitratorModel::AcousticEncode(
    std::span<const nn::Vector> hidden_stream) const {
  if (hidden_stream.empty()) throw ArgumentError("empty hidden stream");
  return AcousticEncodePooled(nn::MaxPoolTime(hidden_stream));
}

nn::Vector ArbitratorModel::AcousticEncodePooled(std::span<const double> pooled) const {
  if (pooled.size() != hidden_dim()) {
    throw DimensionError("pooled hidden vector has the wrong size");
  }
  return acoustic_.Forward(pooled);
}

nn::Vector ArbitratorModel::TextEncode(const std::vector<int>& tokens) const {
  for (int id : tokens) {
    if (id < 0 || id >= sentinel_id()) {
      throw IndexError("token id " + std::to_string(id) + " outside the vocabulary");
    }
  }
  if (tokens.empty()) return text_.Forward(embedding_.Lookup(sentinel_id()));
  std::vector<nn::Vector> per_token;
  per_token.reserve(tokens.size());
  for (int id : tokens) per_token.push_back(text_.Forward(embedding_.Lookup(id)));
  return nn::MaxPoolTime(per_token);
}

nn::Vector ArbitratorModel::TextEncode(const std::vector<int>& tokens,
                                       TextEmbeddingCache* cache) const {
  if (!cache) return TextEncode(tokens);
  if (const nn::Vector* hit = cache->Find(tokens)) return *hit;
  return cache->Insert(tokens, TextEncode(tokens));
}

double ArbitratorModel::Posterior(std::span<const double> acoustic,
                                  std::span<const double> text) const {
  nn::Vector concat(acoustic.begin(), acoustic.end());
  concat.insert(concat.end(), text.begin(), text.end());
  return nn::Softmax(fusion_.Forward(concat))[1];
}

ArbitrationResult ArbitratorModel::Arbitrate(const nn::RunningMax& pooled_hidden,
                                             const std::vector<int>& tokens,
                                             TextEmbeddingCache* cache,
                                             double threshold) const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ArgumentError("T_arb must lie in [0, 1]");
  }
  if (pooled_hidden.empty()) throw ArgumentError("empty hidden stream");
  const nn::Vector v = AcousticEncodePooled(pooled_hidden.values());
  const nn::Vector e = TextEncode(tokens, cache);
  ArbitrationResult result;
  result.p_arb = Posterior(v, e);
  result.accept = result.p_arb > threshold;
  return result;
}

double ArbitratorModel::Accumulate(const Batch& batch,
                                   std::vector<nn::Tensor>* grads) const {
  if (batch.empty()) throw ArgumentError("empty arbitrator batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::span<nn::Tensor> g;
  if (grads) g = *grads;
  const std::size_t n_acoustic = 2 * acoustic_.num_layers();
  const std::size_t n_text = 2 * text_.num_layers();
  const std::size_t n_fusion = 2 * fusion_.num_layers();
  const std::size_t a_dim = config_.acoustic_dim;

  double loss = 0.0;
  nn::Mlp::Trace acoustic_trace, fusion_trace;
  std::vector<nn::Mlp::Trace> token_traces;
  std::vector<nn::Vector> per_token;
  for (const ArbitratorExample* ex : batch) {
    const nn::Vector v = acoustic_.Forward(ex->pooled_hidden, &acoustic_trace);
    std::vector<int> ids = ex->tokens;
    for (int id : ids) {
      if (id < 0 || id >= sentinel_id()) throw IndexError("token id outside the vocabulary");
    }
    if (ids.empty()) ids.push_back(sentinel_id());
    token_traces.resize(ids.size());
    per_token.clear();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      per_token.push_back(text_.Forward(embedding_.Lookup(ids[i]), &token_traces[i]));
    }
    const nn::PoolResult pooled = nn::MaxPoolTimeWithArgmax(per_token);
    nn::Vector concat = v;
    concat.insert(concat.end(), pooled.values.begin(), pooled.values.end());
    const nn::Vector p = nn::Softmax(fusion_.Forward(concat, &fusion_trace));
    loss += scale * nn::CrossEntropy(p, ex->label);
    if (!grads) continue;

    nn::Vector dlogits = nn::SoftmaxCrossEntropyGrad(p, ex->label);
    for (double& d : dlogits) d *= scale;
    const nn::Vector dconcat =
        fusion_.Backward(fusion_trace, dlogits, g.subspan(1 + n_acoustic + n_text, n_fusion));
    acoustic_.Backward(acoustic_trace, std::span<const double>(dconcat).first(a_dim),
                       g.subspan(1, n_acoustic));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      nn::Vector du(config_.text_dim, 0.0);
      bool any = false;
      for (std::size_t d = 0; d < du.size(); ++d) {
        if (pooled.argmax[d] == i) {
          du[d] = dconcat[a_dim + d];
          any = true;
        }
      }
      if (!any) continue;
      const nn::Vector dx = text_.Backward(token_traces[i], du, g.subspan(1 + n_acoustic, n_text));
      embedding_.AccumulateGrad(ids[i], dx, &g[0]);
    }
  }
  return loss;
}

double ArbitratorModel::Loss(const Batch& batch) const { return Accumulate(batch, nullptr); }

double ArbitratorModel::LossAndGrad(const Batch& batch,
                                    std::vector<nn::Tensor>* grads) const {
  const std::vector<const nn::Tensor*> params = Parameters();
  *grads = nn::ZeroLike(params);
  return Accumulate(batch, grads);
}

std::vector<nn::Tensor*> ArbitratorModel::Parameters() {
  std::vector<nn::Tensor*> out = {&embedding_.table()};
  for (nn::Mlp* m : {&acoustic_, &text_, &fusion_}) {
    for (nn::Tensor* t : m->Parameters()) out.push_back(t);
  }
  return out;
}

std::vector<const nn::Tensor*> ArbitratorModel::Parameters() const {
  std::vector<const nn::Tensor*> out = {&embedding_.table()};
  for (const nn::Mlp* m : {&acoustic_, &text_, &fusion_}) {
    for (const nn::Tensor* t : m->Parameters()) out.push_back(t);
  }
  return out;
}

Checkpoint ArbitratorModel::ToCheckpoint(std::uint64_t seed) const {
  Checkpoint c;
  c.kind = "arbitrator";
  c.seed = seed;
  c.arch["activation"] = std::string(nn::ActivationName(config_.activation));
  c.tensors.emplace_back("embedding", embedding_.table());
  AddMlp(&c, "acoustic", acoustic_);
  AddMlp(&c, "text", text_);
  AddMlp(&c, "fusion", fusion_);
  return c;
}

ArbitratorModel ArbitratorModel::FromCheckpoint(const Checkpoint& c) {
  if (c.kind != "arbitrator") {
    throw ParseError("checkpoint kind '" + c.kind + "' is not an arbitrator");
  }
  ArbitratorModel m;
  m.config_.activation = nn::ParseActivation(c.Arch("activation"));
  m.acoustic_ = GetMlp(c, "acoustic");
  m.text_ = GetMlp(c, "text");
  m.fusion_ = GetMlp(c, "fusion");
  const nn::Tensor& table = c.Get("embedding");
  if (table.rank() != 2 || table.dim(0) < 2) {
    throw ParseError("arbitrator embedding table has the wrong shape");
  }
  m.embedding_ = nn::EmbeddingTable(table.dim(0), table.dim(1));
  m.embedding_.table() = table;
  m.config_.acoustic_dim = m.acoustic_.out_dim();
  m.config_.text_embedding_dim = table.dim(1);
  m.config_.text_dim = m.text_.out_dim();
  m.config_.fusion_hidden.clear();
  for (std::size_t i = 0; i + 1 < m.fusion_.num_layers(); ++i) {
    m.config_.fusion_hidden.push_back(m.fusion_.layers()[i].out_dim());
  }
  if (m.text_.in_dim() != table.dim(1) ||
      m.fusion_.in_dim() != m.acoustic_.out_dim() + m.text_.out_dim() ||
      m.fusion_.out_dim() != 2) {
    throw ParseError("arbitrator checkpoint shapes are inconsistent");
  }
  return m;
}

bool ArbitratorModel::operator==(const ArbitratorModel& other) const {
  return ToCheckpoint(0) == other.ToCheckpoint(0);
}

std::vector<ArbitratorExample> SampleArbitratorExamples(
    const Utterance& u, const FrameModel& frame_model,
    const DecoderConfig& decoder, const TokenVocab& vocab,
    const ArbitratorSampling& sampling, nn::Rng* rng) {
  const FrameView view = ViewUtterance(u, frame_model, decoder, vocab);
  const std::size_t lo = u.eos_frame > sampling.window_before
                             ? u.eos_frame - sampling.window_before
                             : 0;
  const std::size_t hi = std::min(u.audio_end_frame, u.eos_frame + sampling.window_after);
  std::size_t first_emit = u.num_frames;
  for (std::size_t t = 0; t < u.num_frames; ++t) {
    if (view.hyp_length[t] > 0) {
      first_emit = t;
      break;
    }
  }
  std::vector<std::size_t> early;
  for (std::size_t t = first_emit; t < lo; ++t) early.push_back(t);
  const std::size_t take = std::min(sampling.early_samples, early.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t remaining = early.size() - i;
    std::size_t j = i + static_cast<std::size_t>(nn::Uniform01(*rng) * static_cast<double>(remaining));
    j = std::min(j, early.size() - 1);
    std::swap(early[i], early[j]);
  }
  std::vector<std::size_t> frames(early.begin(), early.begin() + static_cast<std::ptrdiff_t>(take));
  for (std::size_t t = lo; t <= hi && t < u.num_frames; ++t) {
    if (LabelObservable(u, t)) frames.push_back(t);
  }
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  return ExamplesAt(u, view, frames);
}

std::vector<ArbitratorExample> CandidateExamples(const Utterance& u,
                                                 const FrameModel& frame_model,
                                                 const DecoderConfig& decoder,
                                                 const TokenVocab& vocab,
                                                 double t_ep) {
  const FrameView view = ViewUtterance(u, frame_model, decoder, vocab);
  std::vector<std::size_t> frames;
  std::size_t next_eos = 0;
  for (std::size_t t = 0; t < u.num_frames; ++t) {
    bool candidate = AcousticCandidate(view.outputs[t].ep, t_ep);
    while (next_eos < view.eos_frames.size() && view.eos_frames[next_eos] <= t) {
      candidate = candidate || view.eos_frames[next_eos] == t;
      ++next_eos;
    }
    if (candidate && LabelObservable(u, t)) frames.push_back(t);
  }
  return ExamplesAt(u, view, frames);
}

double ArbitratorAccuracy(const ArbitratorModel& model,
                          std::span<const ArbitratorExample> examples) {
  if (examples.empty()) throw UndefinedMetricError("no arbitrator examples");
  std::size_t correct = 0;
  for (const ArbitratorExample& ex : examples) {
    const double p = model.Posterior(model.AcousticEncodePooled(ex.pooled_hidden),
                                     model.TextEncode(ex.tokens));
    correct += (p > 0.5) == (ex.label == 1);
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

ArbitratorModel TrainArbitrator(const Corpus& train, const FrameModel& frame_model,
                                const DecoderConfig& decoder,
                                const ArbitratorConfig& config,
                                const nn::TrainConfig& train_config,
                                const ArbitratorSampling& sampling) {
  train_config.Validate();
  config.Validate();
  decoder.Validate();
  if (frame_model.empty()) throw DependencyError("arbitrator training needs a trained frame model");
  if (train.utterances.empty()) throw DependencyError("cannot train an arbitrator on an empty corpus");

  nn::Rng rng(train_config.seed);
  std::vector<ArbitratorExample> examples;
  for (const Utterance& u : train.utterances) {
    std::vector<ArbitratorExample> ex =
        SampleArbitratorExamples(u, frame_model, decoder, train.vocab, sampling, &rng);
    std::move(ex.begin(), ex.end(), std::back_inserter(examples));
  }
  if (examples.empty()) throw DependencyError("no arbitrator training examples");

  ArbitratorModel model(config, frame_model.hidden_dim(), train.vocab.size(), &rng);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<nn::Tensor> grads;
  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(nn::Uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
      ArbitratorModel::Batch batch;
      for (std::size_t i = start; i < std::min(order.size(), start + train_config.batch_size); ++i) {
        batch.push_back(&examples[order[i]]);
      }
      model.LossAndGrad(batch, &grads);
      std::vector<nn::Tensor*> params = model.Parameters();
      nn::SgdStep(params, grads, train_config);
    }
  }
  return model;
}

}  // namespace endgate
