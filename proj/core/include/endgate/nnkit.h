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

#ifndef ENDGATE_NNKIT_H_
#define ENDGATE_NNKIT_H_

// A deliberately small neural-network kit: row-major tensors, dense layers,
// embeddings, temporal max-pooling, softmax/cross-entropy and plain SGD.
// Backpropagation is written out per layer; there is no autodiff graph.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "endgate/errors.h"

namespace endgate::nn {

using Vector = std::vector<double>;
using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits of one engine draw, so
// sequences are identical across standard library implementations.
double Uniform01(Rng& rng);

// Standard normal via Box-Muller on Uniform01 draws (two draws per sample).
double StandardNormal(Rng& rng);

class Tensor {
 public:
  Tensor() = default;
  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);
  // Throws DimensionError unless product(shape) == data.size().
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor FromVector(std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Row access for rank-2 tensors.
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  void Fill(double value);
  bool AllFinite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

enum class Activation { kIdentity, kRelu, kTanh };

std::string_view ActivationName(Activation activation);
Activation ParseActivation(std::string_view name);

struct DenseLayer {
  Tensor weights;  // [out, in]
  Tensor bias;     // [out]
  Activation activation = Activation::kIdentity;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act);
  DenseLayer(Tensor w, Tensor b, Activation act);

  std::size_t in_dim() const { return weights.dim(1); }
  std::size_t out_dim() const { return weights.dim(0); }
};

// activation(W * input + b).
Vector DenseForward(const DenseLayer& layer, std::span<const double> input);

// Given the forward input and post-activation output, accumulates dL/dW and
// dL/db into the supplied tensors and returns dL/dinput.
Vector DenseBackward(const DenseLayer& layer, std::span<const double> input,
                     std::span<const double> output,
                     std::span<const double> grad_output, Tensor* grad_weights,
                     Tensor* grad_bias);

// Xavier-uniform weights, bound sqrt(6 / (fan_in + fan_out)); zero bias.
void XavierInit(DenseLayer* layer, Rng* rng);

// A chain of dense layers. Parameters are ordered (w0, b0, w1, b1, ...).
class Mlp {
 public:
  struct Trace {
    // activations[0] is the input, activations.back() the output.
    std::vector<Vector> activations;
  };

  Mlp() = default;
  // dims = {in, h1, ..., out}; hidden layers use `hidden`, last uses `output`.
  Mlp(std::span<const std::size_t> dims, Activation hidden, Activation output);
  explicit Mlp(std::vector<DenseLayer> layers);

  Vector Forward(std::span<const double> input) const;
  Vector Forward(std::span<const double> input, Trace* trace) const;
  // `grads` holds 2 tensors per layer in Parameters() order; accumulates.
  Vector Backward(const Trace& trace, std::span<const double> grad_output,
                  std::span<Tensor> grads) const;

  void Init(Rng* rng);

  std::vector<Tensor*> Parameters();
  std::vector<const Tensor*> Parameters() const;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t vocab_size, std::size_t dim);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t dim() const { return dim_; }

  // Throws IndexError for ids outside [0, vocab_size).
  std::span<const double> Lookup(int id) const;
  void AccumulateGrad(int id, std::span<const double> grad,
                      Tensor* grad_table) const;

  void Init(Rng* rng);

  Tensor& table() { return table_; }
  const Tensor& table() const { return table_; }

 private:
  std::size_t vocab_size_ = 0;
  std::size_t dim_ = 0;
  Tensor table_;
};

// Elementwise max over a non-empty sequence of equal-length frames.
Vector MaxPoolTime(std::span<const Vector> frames);

// Same, also reporting which frame supplied each output entry (first wins on
// ties). Used for backpropagation through the pool.
struct PoolResult {
  Vector values;
  std::vector<std::size_t> argmax;
};
PoolResult MaxPoolTimeWithArgmax(std::span<const Vector> frames);

// Streaming elementwise max; equals MaxPoolTime over every frame seen so far.
class RunningMax {
 public:
  void Update(std::span<const double> frame);
  void Reset();
  bool empty() const { return count_ == 0; }
  std::size_t count() const { return count_; }
  const Vector& values() const { return values_; }

 private:
  Vector values_;
  std::size_t count_ = 0;
};

Vector Softmax(std::span<const double> logits);

// -ln(max(p[label], 1e-12)).
double CrossEntropy(std::span<const double> probabilities, std::size_t label);

// Gradient of CrossEntropy(Softmax(z), label) with respect to z: p - onehot.
Vector SoftmaxCrossEntropyGrad(std::span<const double> probabilities,
                               std::size_t label);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 10;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  double l2 = 0.0;

  void Validate() const;
};

// p <- p - lr * (g + l2 * p), elementwise.
void SgdStep(std::span<Tensor* const> params, std::span<const Tensor> grads,
             const TrainConfig& config);

std::vector<Tensor> ZeroLike(std::span<Tensor* const> params);
std::vector<Tensor> ZeroLike(std::span<const Tensor* const> params);

// Central finite differences against `analytic`, which must match `params`.
// Returns max |a - n| / max(1e-8, |a| + |n|) over every scalar parameter
// (0 for an empty parameter set). `loss` is re-evaluated after each nudge.
double GradCheck(std::span<Tensor* const> params,
                 std::span<const Tensor> analytic,
                 const std::function<double()>& loss, double epsilon);

// Convenience wrapper for models exposing Parameters(), Loss(example) and
// LossAndGrad(example, &grads).
template <typename Model, typename Example>
double GradCheckModel(Model& model, const Example& example, double epsilon) {
  std::vector<Tensor> grads;
  model.LossAndGrad(example, &grads);
  std::vector<Tensor*> params = model.Parameters();
  return GradCheck(params, grads, [&] { return model.Loss(example); },
                   epsilon);
}

}  // namespace endgate::nn

#endif  // ENDGATE_NNKIT_H_
