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

#include "tempo/temporal_generator.h"

#include "tempo/config.h"
#include "tempo/errors.h"

namespace tempo {

GeneratorMode ParseGeneratorMode(const std::string& name) {
  if (name == "sequential") return GeneratorMode::kSequential;
  if (name == "non_sequential") return GeneratorMode::kNonSequential;
  throw ConfigError("unknown generator mode '" + name + "'");
}

const char* GeneratorModeName(GeneratorMode mode) {
  return mode == GeneratorMode::kSequential ? "sequential" : "non_sequential";
}

void GeneratorConfig::Validate() const {
  if (prompt_dim == 0 || hidden_dim == 0 || prompt_tokens == 0) {
    throw ConfigError("generator dimensions must be positive");
  }
  if (num_layers == 0) throw ConfigError("generator needs at least one layer");
  if (num_heads == 0 || width() % num_heads != 0) {
    throw ConfigError("generator width " + std::to_string(width()) +
                      " is not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (ff_depth != 1 && ff_depth != 2) {
    throw ConfigError("generator ff_depth must be 1 or 2");
  }
}

void GeneratorConfig::Update(const KeyValueFile& file) {
  auto size = [&](const char* key, std::size_t current) {
    long v = file.GetInt(std::string("generator.") + key,
                         static_cast<long>(current));
    if (v < 0) {
      throw ConfigError(std::string("generator.") + key + " is negative");
    }
    return static_cast<std::size_t>(v);
  };
  model_dim = size("model_dim", model_dim);
  num_heads = size("num_heads", num_heads);
  hidden_dim = size("hidden_dim", hidden_dim);
  num_layers = size("num_layers", num_layers);
  ff_depth = static_cast<int>(file.GetInt("generator.ff_depth", ff_depth));
  if (auto m = file.Find("generator.mode")) mode = ParseGeneratorMode(*m);
}

namespace {
const GeneratorConfig& Checked(const GeneratorConfig& config) {
  config.Validate();
  return config;
}
}  // namespace

TemporalGenerator::TemporalGenerator(const GeneratorConfig& config, Rng& rng)
    : config_(Checked(config)) {
  const std::size_t d = config_.width();
  if (config_.projected()) in_.emplace(config_.prompt_dim, d, rng);
  EncoderLayerOptions layer{d, config_.num_heads, config_.hidden_dim,
                            config_.ff_depth};
  for (std::size_t i = 0; i < config_.num_layers; ++i) {
    encoder_.emplace_back(layer, rng);
  }
  if (config_.projected()) out_.emplace(d, config_.prompt_dim, rng);
}

Tensor TemporalGenerator::Encode(std::span<const Tensor> history,
                                 const AttentionMask& mask) const {
  if (history.empty()) {
    throw StateError("TemporalGenerator: history must hold at least one prompt");
  }
  const std::size_t n = config_.prompt_dim, k = config_.prompt_tokens;
  for (const Tensor& p : history) {
    const bool ok = (p.rank() == 2 && p.dim(0) == k && p.dim(1) == n) ||
                    (k == 1 && p.rank() == 1 && p.dim(0) == n);
    if (!ok) {
      throw ShapeError("TemporalGenerator: prompt " + ShapeToString(p.shape()) +
                       " does not match [" + std::to_string(k) + " x " +
                       std::to_string(n) + "]");
    }
  }
  std::vector<Tensor> rows;
  rows.reserve(history.size());
  for (const Tensor& p : history) rows.push_back(Reshape(p, {k, n}));
  const std::size_t length = history.size() * k;
  Tensor h = Reshape(Concat(rows, 0), {1, length, n});
  if (in_) h = in_->Forward(h);
  h = Add(h, SinusoidalEncoding(length, config_.width()));
  for (const auto& layer : encoder_) h = layer.Forward(h, mask);
  if (out_) h = out_->Forward(h);
  return Reshape(h, {length, n});
}

namespace {
// Block-causal attention keeps stacked layers prefix-consistent; with one
// layer the last block's output is the same as under full attention.
AttentionMask BlockCausal(std::size_t k) {
  AttentionMask mask;
  mask.causal = true;
  mask.causal_block = k;
  return mask;
}
}  // namespace

Tensor TemporalGenerator::Generate(std::span<const Tensor> history) const {
  Tensor encoded = Encode(history, BlockCausal(config_.prompt_tokens));
  const std::size_t length = encoded.dim(0);
  return Slice(encoded, 0, length - config_.prompt_tokens, length);
}

std::vector<Tensor> TemporalGenerator::GenerateAllCausal(
    std::span<const Tensor> history) const {
  if (config_.mode != GeneratorMode::kNonSequential) {
    throw StateError(
        "GenerateAllCausal requires a generator in non_sequential mode");
  }
  Tensor encoded = Encode(history, BlockCausal(config_.prompt_tokens));
  const std::size_t k = config_.prompt_tokens;
  std::vector<Tensor> out;
  out.reserve(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    out.push_back(Slice(encoded, 0, i * k, (i + 1) * k));
  }
  return out;
}

void TemporalGenerator::CollectParameters(const std::string& prefix,
                                          ParameterList& out) const {
  auto join = [&](const std::string& name) {
    return prefix.empty() ? name : prefix + "." + name;
  };
  if (in_) in_->CollectParameters(join("in"), out);
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    encoder_[i].CollectParameters(join("encoder" + std::to_string(i)), out);
  }
  if (out_) out_->CollectParameters(join("out"), out);
}

}  // namespace tempo
