// Copyright 2026 The Tempo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TEMPO_NN_H_
#define TEMPO_NN_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tempo/tensor.h"

namespace tempo {

using Rng = std::mt19937_64;

using NamedTensor = std::pair<std::string, Tensor>;
using ParameterList = std::vector<NamedTensor>;

// Anything that owns trainable tensors.
class Module {
 public:
  virtual ~Module() = default;
  virtual void CollectParameters(const std::string& prefix,
                                 ParameterList& out) const = 0;

  ParameterList Parameters(const std::string& prefix = "") const;
  // Toggles requires_grad on every owned tensor.
  void SetTrainable(bool trainable) const;
};

std::size_t CountParameters(const Module& module);
std::size_t CountParameters(const ParameterList& params);

// Order-sensitive FNV-1a hash over parameter names and raw value bytes.
std::uint64_t ParameterChecksum(const ParameterList& params);

// Independent 64-bit seed for sub-stream `stream` of `base` (SplitMix64).
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream);

// Draws N(0, stddev^2) values into a new leaf tensor.
Tensor NormalTensor(Shape shape, double stddev, Rng& rng,
                    bool requires_grad = true);

// Fixed sinusoidal table [positions x dim]: even columns sin, odd cos.
Tensor SinusoidalEncoding(std::size_t positions, std::size_t dim);

class LinearLayer : public Module {
 public:
  // Weight and bias drawn from U(-1/sqrt(in), 1/sqrt(in)).
  LinearLayer(std::size_t in_dim, std::size_t out_dim, Rng& rng);

  // x: [..., in_dim] with rank >= 2.
  Tensor Forward(const Tensor& x) const;

  std::size_t in_dim() const { return weight_.dim(0); }
  std::size_t out_dim() const { return weight_.dim(1); }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

  void CollectParameters(const std::string& prefix,
                         ParameterList& out) const override;

 private:
  Tensor weight_;  // [in_dim x out_dim]
  Tensor bias_;    // [out_dim]
};

class MultiHeadAttention : public Module {
 public:
  MultiHeadAttention(std::size_t model_dim, std::size_t num_heads, Rng& rng);

  // x: [batch x tokens x model_dim].
  Tensor Forward(const Tensor& x, const AttentionMask& mask = {}) const;
  // Post-softmax weights [batch x heads x tokens x tokens].
  Tensor Weights(const Tensor& x, const AttentionMask& mask = {}) const;

  std::size_t model_dim() const { return model_dim_; }
  std::size_t num_heads() const { return num_heads_; }
  std::size_t head_dim() const { return model_dim_ / num_heads_; }
  const LinearLayer& output_projection() const { return output_; }

  void CollectParameters(const std::string& prefix,
                         ParameterList& out) const override;

 private:
  Tensor SplitHeads(const Tensor& x, const std::vector<std::size_t>& order) const;
  Tensor WeightsFromProjections(const Tensor& q, const Tensor& k,
                                const AttentionMask& mask) const;
  void CheckInput(const Tensor& x) const;

  std::size_t model_dim_;
  std::size_t num_heads_;
  LinearLayer query_;
  LinearLayer key_;
  LinearLayer value_;
  LinearLayer output_;
};

struct EncoderLayerOptions {
  std::size_t model_dim = 64;
  std::size_t num_heads = 4;
  std::size_t hidden_dim = 128;
  // 2: Linear(d->hidden), ReLU, Linear(hidden->d). 1: ReLU(Linear(d->d)).
  int ff_depth = 2;
};

// Post-norm encoder block: y = Norm(x + Attn(x)); out = Norm(y + FF(y)).
class TransformerEncoderLayer : public Module {
 public:
  TransformerEncoderLayer(const EncoderLayerOptions& options, Rng& rng);

  Tensor Forward(const Tensor& x, const AttentionMask& mask = {}) const;

  const MultiHeadAttention& attention() const { return attention_; }
  const EncoderLayerOptions& options() const { return options_; }

  void CollectParameters(const std::string& prefix,
                         ParameterList& out) const override;

 private:
  EncoderLayerOptions options_;
  MultiHeadAttention attention_;
  LinearLayer ff_in_;
  std::vector<LinearLayer> ff_out_;  // empty when ff_depth == 1
  Tensor norm1_gamma_, norm1_beta_;
  Tensor norm2_gamma_, norm2_beta_;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter set.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options = {});
  Adam(const ParameterList& params, AdamOptions options = {});

  // Applies one update from the current gradients. Every registered
  // parameter must have a gradient.
  void Step();
  void ZeroGrad();

  long step_count() const { return step_count_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_[i]; }
  const std::vector<double>& second_moment(std::size_t i) const { return v_[i]; }
  std::size_t size() const { return params_.size(); }

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_count_ = 0;
};

}  // namespace tempo

#endif  // TEMPO_NN_H_
