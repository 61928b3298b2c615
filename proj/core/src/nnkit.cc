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

#include "endgate/nnkit.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace endgate::nn {

namespace {

constexpr double kLogFloor = 1e-12;

std::string ShapeString(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

double Activate(Activation a, double x) {
  switch (a) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kIdentity:
      break;
  }
  return x;
}

// Derivative expressed through the activation output y.
double ActivateGrad(Activation a, double y) {
  switch (a) {
    case Activation::kRelu:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kIdentity:
      break;
  }
  return 1.0;
}

}  // namespace

double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double StandardNormal(Rng& rng) {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - Uniform01(rng);
  const double u2 = Uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (std::size_t d : shape_) n *= d;
  data_.assign(n, 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  std::size_t n = 1;
  for (std::size_t d : shape_) n *= d;
  if (n != data_.size()) {
    throw DimensionError("tensor shape " + ShapeString(shape_) +
                         " does not match " + std::to_string(data_.size()) +
                         " values");
  }
}

Tensor Tensor::FromVector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for shape " + ShapeString(shape_));
  }
  return shape_[axis];
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t cols = dim(1);
  return std::span<double>(data_).subspan(r * cols, cols);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t cols = dim(1);
  return std::span<const double>(data_).subspan(r * cols, cols);
}

void Tensor::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string_view ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      break;
  }
  return "identity";
}

Activation ParseActivation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw ParseError("unknown activation '" + std::string(name) + "'");
}

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim,
                       Activation act)
    : weights({out_dim, in_dim}), bias({out_dim}), activation(act) {}

DenseLayer::DenseLayer(Tensor w, Tensor b, Activation act)
    : weights(std::move(w)), bias(std::move(b)), activation(act) {
  if (weights.rank() != 2 || bias.rank() != 1 ||
      bias.dim(0) != weights.dim(0)) {
    throw DimensionError("dense layer weight/bias shapes are inconsistent");
  }
}

Vector DenseForward(const DenseLayer& layer, std::span<const double> input) {
  const std::size_t in = layer.in_dim();
  const std::size_t out = layer.out_dim();
  if (input.size() != in) {
    throw DimensionError("dense layer expects input of length " +
                         std::to_string(in) + ", got " +
                         std::to_string(input.size()));
  }
  Vector result(out);
  const double* w = layer.weights.data().data();
  for (std::size_t o = 0; o < out; ++o) {
    double acc = layer.bias[o];
    const double* row = w + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * input[i];
    result[o] = Activate(layer.activation, acc);
  }
  return result;
}

Vector DenseBackward(const DenseLayer& layer, std::span<const double> input,
                     std::span<const double> output,
                     std::span<const double> grad_output, Tensor* grad_weights,
                     Tensor* grad_bias) {
  const std::size_t in = layer.in_dim();
  const std::size_t out = layer.out_dim();
  if (input.size() != in || output.size() != out ||
      grad_output.size() != out) {
    throw DimensionError("dense backward called with mismatched lengths");
  }
  Vector grad_input(in, 0.0);
  const double* w = layer.weights.data().data();
  double* gw = grad_weights->data().data();
  for (std::size_t o = 0; o < out; ++o) {
    const double delta =
        grad_output[o] * ActivateGrad(layer.activation, output[o]);
    if (delta == 0.0) continue;
    (*grad_bias)[o] += delta;
    const double* row = w + o * in;
    double* grow = gw + o * in;
    for (std::size_t i = 0; i < in; ++i) {
      grow[i] += delta * input[i];
      grad_input[i] += delta * row[i];
    }
  }
  return grad_input;
}

void XavierInit(DenseLayer* layer, Rng* rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(layer->in_dim() + layer->out_dim()));
  for (double& w : layer->weights.data()) {
    w = (2.0 * Uniform01(*rng) - 1.0) * bound;
  }
  layer->bias.Fill(0.0);
}

Mlp::Mlp(std::span<const std::size_t> dims, Activation hidden,
         Activation output) {
  if (dims.size() < 2) throw DimensionError("mlp needs at least two dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    layers_.emplace_back(dims[i], dims[i + 1], last ? output : hidden);
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i].in_dim() != layers_[i - 1].out_dim()) {
      throw DimensionError("mlp layer " + std::to_string(i) +
                           " input does not match previous output");
    }
  }
}

Vector Mlp::Forward(std::span<const double> input) const {
  Vector x(input.begin(), input.end());
  for (const DenseLayer& layer : layers_) x = DenseForward(layer, x);
  return x;
}

Vector Mlp::Forward(std::span<const double> input, Trace* trace) const {
  trace->activations.clear();
  trace->activations.emplace_back(input.begin(), input.end());
  for (const DenseLayer& layer : layers_) {
    trace->activations.push_back(
        DenseForward(layer, trace->activations.back()));
  }
  return trace->activations.back();
}

Vector Mlp::Backward(const Trace& trace, std::span<const double> grad_output,
                     std::span<Tensor> grads) const {
  if (grads.size() != 2 * layers_.size() ||
      trace.activations.size() != layers_.size() + 1) {
    throw DimensionError("mlp backward: gradient/trace structure mismatch");
  }
  Vector grad(grad_output.begin(), grad_output.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    grad = DenseBackward(layers_[li], trace.activations[li],
                         trace.activations[li + 1], grad, &grads[2 * li],
                         &grads[2 * li + 1]);
  }
  return grad;
}

void Mlp::Init(Rng* rng) {
  for (DenseLayer& layer : layers_) XavierInit(&layer, rng);
}

std::vector<Tensor*> Mlp::Parameters() {
  std::vector<Tensor*> out;
  for (DenseLayer& layer : layers_) {
    out.push_back(&layer.weights);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const Tensor*> Mlp::Parameters() const {
  std::vector<const Tensor*> out;
  for (const DenseLayer& layer : layers_) {
    out.push_back(&layer.weights);
    out.push_back(&layer.bias);
  }
  return out;
}

std::size_t Mlp::in_dim() const {
  return layers_.empty() ? 0 : layers_.front().in_dim();
}

std::size_t Mlp::out_dim() const {
  return layers_.empty() ? 0 : layers_.back().out_dim();
}

EmbeddingTable::EmbeddingTable(std::size_t vocab_size, std::size_t dim)
    : vocab_size_(vocab_size), dim_(dim), table_({vocab_size, dim}) {}

std::span<const double> EmbeddingTable::Lookup(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) {
    throw IndexError("token id " + std::to_string(id) +
                     " outside vocabulary of size " +
                     std::to_string(vocab_size_));
  }
  return table_.row(static_cast<std::size_t>(id));
}

void EmbeddingTable::AccumulateGrad(int id, std::span<const double> grad,
                                    Tensor* grad_table) const {
  Lookup(id);
  std::span<double> row = grad_table->row(static_cast<std::size_t>(id));
  for (std::size_t i = 0; i < dim_; ++i) row[i] += grad[i];
}

void EmbeddingTable::Init(Rng* rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(1 + dim_));
  for (double& v : table_.data()) v = (2.0 * Uniform01(*rng) - 1.0) * bound;
}

PoolResult MaxPoolTimeWithArgmax(std::span<const Vector> frames) {
  if (frames.empty()) throw ArgumentError("max-pool over an empty sequence");
  const std::size_t d = frames.front().size();
  PoolResult result{frames.front(), std::vector<std::size_t>(d, 0)};
  for (std::size_t t = 1; t < frames.size(); ++t) {
    if (frames[t].size() != d) {
      throw DimensionError("max-pool frames have non-uniform dimension");
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (frames[t][i] > result.values[i]) {
        result.values[i] = frames[t][i];
        result.argmax[i] = t;
      }
    }
  }
  return result;
}

Vector MaxPoolTime(std::span<const Vector> frames) {
  return MaxPoolTimeWithArgmax(frames).values;
}

void RunningMax::Update(std::span<const double> frame) {
  if (count_ == 0) {
    values_.assign(frame.begin(), frame.end());
  } else {
    if (frame.size() != values_.size()) {
      throw DimensionError("running max: frame dimension changed");
    }
    for (std::size_t i = 0; i < frame.size(); ++i) {
      values_[i] = std::max(values_[i], frame[i]);
    }
  }
  ++count_;
}

void RunningMax::Reset() {
  values_.clear();
  count_ = 0;
}

Vector Softmax(std::span<const double> logits) {
  if (logits.size() < 2) throw DimensionError("softmax needs k >= 2");
  double max = logits[0];
  for (double z : logits) {
    if (!std::isfinite(z)) throw NumericError("softmax input is not finite");
    max = std::max(max, z);
  }
  Vector p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double CrossEntropy(std::span<const double> probabilities, std::size_t label) {
  if (label >= probabilities.size()) {
    throw IndexError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(probabilities.size()) + " classes");
  }
  return -std::log(std::max(probabilities[label], kLogFloor));
}

Vector SoftmaxCrossEntropyGrad(std::span<const double> probabilities,
                               std::size_t label) {
  if (label >= probabilities.size()) {
    throw IndexError("label out of range");
  }
  Vector g(probabilities.begin(), probabilities.end());
  g[label] -= 1.0;
  return g;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be > 0");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) {
    throw ConfigError("l2 must be >= 0");
  }
}

void SgdStep(std::span<Tensor* const> params, std::span<const Tensor> grads,
             const TrainConfig& config) {
  if (params.size() != grads.size()) {
    throw DimensionError("sgd: parameter/gradient count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->shape() != grads[k].shape()) {
      throw DimensionError("sgd: gradient shape mismatch at parameter " +
                           std::to_string(k));
    }
  }
  const double lr = config.learning_rate;
  const double l2 = config.l2;
  for (std::size_t k = 0; k < params.size(); ++k) {
    std::span<double> p = params[k]->data();
    std::span<const double> g = grads[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * (g[i] + l2 * p[i]);
  }
}

std::vector<Tensor> ZeroLike(std::span<Tensor* const> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Tensor* p : params) out.emplace_back(p->shape());
  return out;
}

std::vector<Tensor> ZeroLike(std::span<const Tensor* const> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Tensor* p : params) out.emplace_back(p->shape());
  return out;
}

double GradCheck(std::span<Tensor* const> params,
                 std::span<const Tensor> analytic,
                 const std::function<double()>& loss, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw ArgumentError("grad check epsilon must lie in (0, 1e-2]");
  }
  if (params.size() != analytic.size()) {
    throw DimensionError("grad check: parameter/gradient count mismatch");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    std::span<double> p = params[k]->data();
    if (analytic[k].size() != p.size()) {
      throw DimensionError("grad check: gradient shape mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + epsilon;
      const double up = loss();
      p[i] = saved - epsilon;
      const double down = loss();
      p[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("grad check: loss is not finite");
      }
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[k][i];
      const double rel = std::abs(a - numeric) /
                         std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace endgate::nn
