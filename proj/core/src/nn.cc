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

#include "tempo/nn.h"

#include <cmath>
#include <cstring>

#include "tempo/errors.h"

namespace tempo {

ParameterList Module::Parameters(const std::string& prefix) const {
  ParameterList out;
  CollectParameters(prefix, out);
  return out;
}

void Module::SetTrainable(bool trainable) const {
  for (auto& [name, tensor] : Parameters()) {
    Tensor t = tensor;
    t.set_requires_grad(trainable);
  }
}

std::size_t CountParameters(const ParameterList& params) {
  std::size_t total = 0;
  for (const auto& [name, tensor] : params) total += tensor.numel();
  return total;
}

std::size_t CountParameters(const Module& module) {
  return CountParameters(module.Parameters());
}

std::uint64_t ParameterChecksum(const ParameterList& params) {
  std::uint64_t hash = 14695981039346656037ull;
  auto mix = [&hash](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ull;
    }
  };
  for (const auto& [name, tensor] : params) {
    mix(name.data(), name.size());
    mix(tensor.data().data(), tensor.numel() * sizeof(double));
  }
  return hash;
}

std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor NormalTensor(Shape shape, double stddev, Rng& rng, bool requires_grad) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> values(NumElements(shape));
  for (double& v : values) v = dist(rng);
  return Tensor::FromData(std::move(shape), std::move(values), requires_grad);
}

Tensor SinusoidalEncoding(std::size_t positions, std::size_t dim) {
  std::vector<double> table(positions * dim);
  for (std::size_t pos = 0; pos < positions; ++pos) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double pair = static_cast<double>(j - j % 2);
      const double freq = std::pow(10000.0, -pair / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * freq;
      table[pos * dim + j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor::FromData({positions, dim}, std::move(table));
}

// ---------------------------------------------------------------------------

namespace {

Tensor UniformTensor(Shape shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(NumElements(shape));
  for (double& v : values) v = dist(rng);
  return Tensor::FromData(std::move(shape), std::move(values), true);
}

std::string Join(const std::string& prefix, const char* name) {
  return prefix.empty() ? std::string(name) : prefix + "." + name;
}

}  // namespace

LinearLayer::LinearLayer(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  if (in_dim == 0 || out_dim == 0) {
    throw ShapeError("LinearLayer: dimensions must be positive");
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  weight_ = UniformTensor({in_dim, out_dim}, bound, rng);
  bias_ = UniformTensor({out_dim}, bound, rng);
}

Tensor LinearLayer::Forward(const Tensor& x) const {
  return Add(MatMul(x, weight_), bias_);
}

void LinearLayer::CollectParameters(const std::string& prefix,
                                    ParameterList& out) const {
  out.emplace_back(Join(prefix, "weight"), weight_);
  out.emplace_back(Join(prefix, "bias"), bias_);
}

// ---------------------------------------------------------------------------

namespace {
std::size_t CheckedHeads(std::size_t model_dim, std::size_t num_heads) {
  if (num_heads == 0 || model_dim % num_heads != 0) {
    throw ShapeError("MultiHeadAttention: model_dim " +
                     std::to_string(model_dim) + " not divisible by " +
                     std::to_string(num_heads) + " heads");
  }
  return num_heads;
}
}  // namespace

MultiHeadAttention::MultiHeadAttention(std::size_t model_dim,
                                       std::size_t num_heads, Rng& rng)
    : model_dim_(model_dim),
      num_heads_(CheckedHeads(model_dim, num_heads)),
      query_(model_dim, model_dim, rng),
      key_(model_dim, model_dim, rng),
      value_(model_dim, model_dim, rng),
      output_(model_dim, model_dim, rng) {}

void MultiHeadAttention::CheckInput(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(2) != model_dim_) {
    throw ShapeError("MultiHeadAttention: expected [batch x tokens x " +
                     std::to_string(model_dim_) + "], got " +
                     ShapeToString(x.shape()));
  }
}

// [B, T, d] -> [B, T, h, hd] -> permuted by `order`.
Tensor MultiHeadAttention::SplitHeads(
    const Tensor& x, const std::vector<std::size_t>& order) const {
  const std::size_t batch = x.dim(0), tokens = x.dim(1);
  return Permute(Reshape(x, {batch, tokens, num_heads_, head_dim()}), order);
}

Tensor MultiHeadAttention::WeightsFromProjections(
    const Tensor& q, const Tensor& k, const AttentionMask& mask) const {
  Tensor qh = SplitHeads(q, {0, 2, 1, 3});   // [B, h, T, hd]
  Tensor kt = SplitHeads(k, {0, 2, 3, 1});   // [B, h, hd, T]
  Tensor scores = Scale(MatMul(qh, kt),
                        1.0 / std::sqrt(static_cast<double>(head_dim())));
  return Softmax(MaskScores(scores, mask), 3);
}

Tensor MultiHeadAttention::Weights(const Tensor& x,
                                   const AttentionMask& mask) const {
  CheckInput(x);
  return WeightsFromProjections(query_.Forward(x), key_.Forward(x), mask);
}

Tensor MultiHeadAttention::Forward(const Tensor& x,
                                   const AttentionMask& mask) const {
  CheckInput(x);
  const std::size_t batch = x.dim(0), tokens = x.dim(1);
  Tensor weights =
      WeightsFromProjections(query_.Forward(x), key_.Forward(x), mask);
  Tensor vh = SplitHeads(value_.Forward(x), {0, 2, 1, 3});
  Tensor mixed = Permute(MatMul(weights, vh), {0, 2, 1, 3});
  return output_.Forward(Reshape(mixed, {batch, tokens, model_dim_}));
}

void MultiHeadAttention::CollectParameters(const std::string& prefix,
                                           ParameterList& out) const {
  query_.CollectParameters(Join(prefix, "query"), out);
  key_.CollectParameters(Join(prefix, "key"), out);
  value_.CollectParameters(Join(prefix, "value"), out);
  output_.CollectParameters(Join(prefix, "output"), out);
}

// ---------------------------------------------------------------------------

namespace {
std::size_t FeedForwardInDim(const EncoderLayerOptions& o) {
  if (o.ff_depth != 1 && o.ff_depth != 2) {
    throw ShapeError("TransformerEncoderLayer: ff_depth must be 1 or 2");
  }
  return o.ff_depth == 2 ? o.hidden_dim : o.model_dim;
}
}  // namespace

TransformerEncoderLayer::TransformerEncoderLayer(
    const EncoderLayerOptions& options, Rng& rng)
    : options_(options),
      attention_(options.model_dim, options.num_heads, rng),
      ff_in_(options.model_dim, FeedForwardInDim(options), rng) {
  if (options.ff_depth == 2) {
    ff_out_.emplace_back(options.hidden_dim, options.model_dim, rng);
  }
  const std::size_t d = options.model_dim;
  norm1_gamma_ = Tensor::Full({d}, 1.0, true);
  norm1_beta_ = Tensor::Zeros({d}, true);
  norm2_gamma_ = Tensor::Full({d}, 1.0, true);
  norm2_beta_ = Tensor::Zeros({d}, true);
}

Tensor TransformerEncoderLayer::Forward(const Tensor& x,
                                        const AttentionMask& mask) const {
  Tensor y = LayerNorm(Add(x, attention_.Forward(x, mask)), norm1_gamma_,
                       norm1_beta_);
  Tensor ff = Relu(ff_in_.Forward(y));
  if (!ff_out_.empty()) ff = ff_out_.front().Forward(ff);
  return LayerNorm(Add(y, ff), norm2_gamma_, norm2_beta_);
}

void TransformerEncoderLayer::CollectParameters(const std::string& prefix,
                                                ParameterList& out) const {
  attention_.CollectParameters(Join(prefix, "attention"), out);
  ff_in_.CollectParameters(Join(prefix, "ff_in"), out);
  if (!ff_out_.empty()) {
    ff_out_.front().CollectParameters(Join(prefix, "ff_out"), out);
  }
  out.emplace_back(Join(prefix, "norm1.gamma"), norm1_gamma_);
  out.emplace_back(Join(prefix, "norm1.beta"), norm1_beta_);
  out.emplace_back(Join(prefix, "norm2.gamma"), norm2_gamma_);
  out.emplace_back(Join(prefix, "norm2.beta"), norm2_beta_);
}

// ---------------------------------------------------------------------------

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Tensor& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

namespace {
std::vector<Tensor> Unnamed(const ParameterList& params) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : params) out.push_back(t);
  return out;
}
}  // namespace

Adam::Adam(const ParameterList& params, AdamOptions options)
    : Adam(Unnamed(params), options) {}

void Adam::Step() {
  for (const Tensor& p : params_) {
    if (!p.has_grad()) {
      throw StateError("Adam::Step: parameter of shape " +
                       ShapeToString(p.shape()) + " has no gradient");
    }
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double correction1 = 1.0 - std::pow(options_.beta1, t);
  const double correction2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    std::span<double> w = p.mutable_data();
    std::span<const double> g = p.grad();
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * g[j];
      v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      w[j] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

void Adam::ZeroGrad() {
  for (Tensor& p : params_) p.ZeroGrad();
}

}  // namespace tempo
