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

#include "tempo/backbone.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "tempo/config.h"
#include "tempo/errors.h"

namespace tempo {

void BackboneConfig::Validate() const {
  if (input_dim == 0 || embed_dim == 0 || output_dim == 0 || hidden_dim == 0) {
    throw ConfigError("backbone dimensions must be positive");
  }
  if (num_heads == 0 || embed_dim % num_heads != 0) {
    throw ConfigError("backbone embed_dim " + std::to_string(embed_dim) +
                      " is not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (num_encoder_layers == 0) throw ConfigError("backbone needs an encoder layer");
  if (ff_depth != 1 && ff_depth != 2) throw ConfigError("ff_depth must be 1 or 2");
}

void BackboneConfig::Update(const KeyValueFile& file) {
  auto size = [&](const char* key, std::size_t current) {
    long v = file.GetInt(std::string("backbone.") + key,
                         static_cast<long>(current));
    if (v < 0) throw ConfigError(std::string("backbone.") + key + " is negative");
    return static_cast<std::size_t>(v);
  };
  input_dim = size("input_dim", input_dim);
  embed_dim = size("embed_dim", embed_dim);
  num_heads = size("num_heads", num_heads);
  hidden_dim = size("hidden_dim", hidden_dim);
  num_encoder_layers = size("num_encoder_layers", num_encoder_layers);
  output_dim = size("output_dim", output_dim);
  ff_depth = static_cast<int>(file.GetInt("backbone.ff_depth", ff_depth));
  if (auto task_name = file.Find("backbone.task")) task = ParseTaskKind(*task_name);
  variable_length = file.GetBool("backbone.variable_length", variable_length);
}

// ---------------------------------------------------------------------------

namespace {
const BackboneConfig& Checked(const BackboneConfig& config) {
  config.Validate();
  return config;
}

std::vector<TransformerEncoderLayer> MakeEncoder(const BackboneConfig& config,
                                                 Rng& rng) {
  EncoderLayerOptions layer{config.embed_dim, config.num_heads,
                            config.hidden_dim, config.ff_depth};
  std::vector<TransformerEncoderLayer> encoder;
  for (std::size_t i = 0; i < config.num_encoder_layers; ++i) {
    encoder.emplace_back(layer, rng);
  }
  return encoder;
}
}  // namespace

Backbone::Backbone(const BackboneConfig& config, Rng& rng)
    : config_(Checked(config)),
      embed_(config.input_dim, config.embed_dim, rng),
      encoder_(MakeEncoder(config, rng)),
      head_(config.embed_dim, config.output_dim, rng) {
  if (config.variable_length) {
    pad_token_ = NormalTensor({config.embed_dim}, 0.02, rng);
  }
}

Tensor Backbone::Embed(const Tensor& inputs,
                       std::span<const std::size_t> lengths) const {
  const std::size_t n = config_.embed_dim;
  if (inputs.rank() == 2) {
    if (inputs.dim(1) != config_.input_dim) {
      throw ShapeError("Backbone::Embed: expected [B x " +
                       std::to_string(config_.input_dim) + "], got " +
                       ShapeToString(inputs.shape()));
    }
    const std::size_t batch = inputs.dim(0);
    Tensor rows = Reshape(inputs, {batch, 1, config_.input_dim});
    return embed_.Forward(rows);
  }
  if (inputs.rank() != 3 || inputs.dim(2) != config_.input_dim) {
    throw ShapeError("Backbone::Embed: expected [B x W x " +
                     std::to_string(config_.input_dim) + "], got " +
                     ShapeToString(inputs.shape()));
  }
  const std::size_t batch = inputs.dim(0), window = inputs.dim(1);
  Tensor tokens = Add(embed_.Forward(inputs), SinusoidalEncoding(window, n));
  if (lengths.empty()) return tokens;
  if (!pad_token_.defined()) {
    throw ShapeError("Backbone::Embed: variable-length input needs a backbone "
                     "built with variable_length");
  }
  if (lengths.size() != batch) {
    throw ShapeError("Backbone::Embed: one length per example required");
  }
  std::vector<double> keep(batch * window * n, 1.0);
  std::vector<double> pad(batch * window * n, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t padded = window - std::min(lengths[b], window);
    for (std::size_t s = 0; s < padded; ++s) {
      for (std::size_t j = 0; j < n; ++j) {
        keep[(b * window + s) * n + j] = 0.0;
        pad[(b * window + s) * n + j] = 1.0;
      }
    }
  }
  Shape shape{batch, window, n};
  return Add(Mul(tokens, Tensor::FromData(shape, std::move(keep))),
             Mul(Tensor::FromData(shape, std::move(pad)), pad_token_));
}

Tensor Backbone::Forward(const Tensor& tokens, const AttentionMask& mask,
                         std::optional<std::size_t> readout) const {
  if (tokens.rank() != 3 || tokens.dim(2) != config_.embed_dim) {
    throw ShapeError("Backbone::Forward: expected [B x T x " +
                     std::to_string(config_.embed_dim) + "], got " +
                     ShapeToString(tokens.shape()));
  }
  const std::size_t batch = tokens.dim(0), count = tokens.dim(1);
  const std::size_t position = readout.value_or(count - 1);
  if (position >= count) {
    throw ShapeError("Backbone::Forward: readout position " +
                     std::to_string(position) + " out of range for " +
                     std::to_string(count) + " tokens");
  }
  Tensor h = tokens;
  for (const auto& layer : encoder_) h = layer.Forward(h, mask);
  Tensor last = Reshape(Slice(h, 1, position, position + 1),
                        {batch, config_.embed_dim});
  return head_.Forward(last);
}

AttentionMask Backbone::PaddingMask(std::size_t batch,
                                    std::size_t prefix_tokens,
                                    std::size_t window,
                                    std::span<const std::size_t> lengths) const {
  AttentionMask mask;
  if (lengths.empty()) return mask;
  const std::size_t keys = prefix_tokens + window;
  mask.key_count = keys;
  mask.key_valid.assign(batch * keys, 1);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t padded = window - std::min(lengths[b], window);
    for (std::size_t s = 0; s < padded; ++s) {
      mask.key_valid[b * keys + prefix_tokens + s] = 0;
    }
  }
  return mask;
}

Tensor Backbone::Loss(const Tensor& outputs, const Tensor& targets) const {
  if (config_.task == TaskKind::kBinaryClassification) {
    return BinaryCrossEntropyLoss(outputs, targets);
  }
  return MseLoss(outputs, targets);
}

void Backbone::Freeze() {
  SetTrainable(false);
  frozen_ = true;
}

void Backbone::CollectParameters(const std::string& prefix,
                                 ParameterList& out) const {
  auto join = [&](const std::string& name) {
    return prefix.empty() ? name : prefix + "." + name;
  };
  embed_.CollectParameters(join("embed"), out);
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    encoder_[i].CollectParameters(join("encoder" + std::to_string(i)), out);
  }
  head_.CollectParameters(join("head"), out);
  if (pad_token_.defined()) out.emplace_back(join("pad_token"), pad_token_);
}

// ---------------------------------------------------------------------------

std::string TrainingLog::ToCsv() const {
  std::ostringstream out;
  out << "phase,epoch,domain,loss,validation_loss\n";
  char buffer[64];
  for (const Entry& e : entries) {
    out << phase << ',' << e.epoch << ',' << e.domain << ',';
    std::snprintf(buffer, sizeof(buffer), "%.17g", e.loss);
    out << buffer << ',';
    if (e.validation_loss >= 0.0) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", e.validation_loss);
      out << buffer;
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::vector<std::size_t>> ShuffledBatches(std::size_t n,
                                                      std::size_t batch_size,
                                                      Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with an explicit draw so the order is identical across
  // standard library implementations.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t size = batch_size == 0 ? std::max<std::size_t>(n, 1)
                                           : batch_size;
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += size) {
    batches.emplace_back(order.begin() + start,
                         order.begin() + std::min(n, start + size));
  }
  return batches;
}

void CheckFinite(double loss, const std::string& where) {
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite loss during " + where);
  }
}

namespace {

DomainDataset Pool(std::span<const DomainDataset> parts) {
  DomainDataset pooled = parts.front();
  pooled.inputs.clear();
  pooled.targets.clear();
  pooled.lengths.clear();
  pooled.domain_index = 0;
  const bool any_lengths = std::any_of(
      parts.begin(), parts.end(),
      [](const DomainDataset& d) { return !d.lengths.empty(); });
  for (const DomainDataset& d : parts) {
    if (d.input_dim != pooled.input_dim || d.window != pooled.window ||
        d.output_dim != pooled.output_dim || d.layout != pooled.layout) {
      throw DataError("cannot pool domains with different shapes");
    }
    pooled.inputs.insert(pooled.inputs.end(), d.inputs.begin(), d.inputs.end());
    pooled.targets.insert(pooled.targets.end(), d.targets.begin(),
                          d.targets.end());
    if (any_lengths) {
      if (d.lengths.empty()) {
        pooled.lengths.insert(pooled.lengths.end(), d.size(), d.window);
      } else {
        pooled.lengths.insert(pooled.lengths.end(), d.lengths.begin(),
                              d.lengths.end());
      }
    }
  }
  return pooled;
}

double EvaluateLoss(const Backbone& model, const DomainDataset& data) {
  NoGradGuard no_grad;
  Batch batch = FullBatch(data);
  Tensor tokens = model.Embed(batch.inputs, batch.lengths);
  AttentionMask mask = model.PaddingMask(batch.inputs.dim(0), 0,
                                         data.window, batch.lengths);
  return model.Loss(model.Forward(tokens, mask), batch.targets).item();
}

}  // namespace

TrainingLog Pretrain(Backbone& model, std::span<const DomainDataset> pooled,
                     const PretrainOptions& options) {
  if (model.frozen()) throw StateError("Pretrain: backbone is already frozen");
  if (pooled.empty()) throw DataError("Pretrain: no source data");
  DomainDataset data = Pool(pooled);
  if (data.size() == 0) throw DataError("Pretrain: source data is empty");

  TrainingLog log;
  log.phase = "pretrain";
  Rng rng(options.seed);
  ParameterList params = model.Parameters();
  Adam adam(params, options.adam);
  const bool early_stop = options.patience > 0 && options.validation != nullptr &&
                          options.validation->size() > 0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<Tensor> best_values;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    double total = 0.0;
    std::size_t seen = 0;
    for (const auto& rows : ShuffledBatches(data.size(), options.batch_size, rng)) {
      Batch batch = MakeBatch(data, rows);
      Tensor tokens = model.Embed(batch.inputs, batch.lengths);
      AttentionMask mask =
          model.PaddingMask(rows.size(), 0, data.window, batch.lengths);
      Tensor loss = model.Loss(model.Forward(tokens, mask), batch.targets);
      CheckFinite(loss.item(), "pretraining");
      adam.ZeroGrad();
      Backward(loss);
      adam.Step();
      total += loss.item() * static_cast<double>(rows.size());
      seen += rows.size();
    }
    TrainingLog::Entry entry{epoch + 1, 0, total / static_cast<double>(seen)};
    if (early_stop) {
      entry.validation_loss = EvaluateLoss(model, *options.validation);
      if (entry.validation_loss < best) {
        best = entry.validation_loss;
        since_best = 0;
        best_values.clear();
        for (const auto& [name, t] : params) best_values.push_back(t.Clone());
      } else if (++since_best >= options.patience) {
        log.entries.push_back(entry);
        break;
      }
    }
    log.entries.push_back(entry);
  }
  if (early_stop && !best_values.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor dst = params[i].second;
      std::span<const double> src = best_values[i].data();
      std::copy(src.begin(), src.end(), dst.mutable_data().begin());
    }
  }
  adam.ZeroGrad();
  model.Freeze();
  return log;
}

}  // namespace tempo
