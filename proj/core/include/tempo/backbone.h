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

#ifndef TEMPO_BACKBONE_H_
#define TEMPO_BACKBONE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempo/dataset.h"
#include "tempo/nn.h"

namespace tempo {

class KeyValueFile;

struct BackboneConfig {
  std::size_t input_dim = 1;
  std::size_t embed_dim = 64;
  std::size_t num_heads = 4;
  std::size_t hidden_dim = 128;
  std::size_t num_encoder_layers = 1;
  std::size_t output_dim = 1;
  TaskKind task = TaskKind::kForecasting;
  int ff_depth = 2;
  // Adds a learned pad token for right-aligned variable-length windows.
  bool variable_length = false;

  void Validate() const;
  // Reads the [backbone] section; absent keys keep the current values.
  void Update(const KeyValueFile& file);
};

// Frozen task network: linear input embedding, encoder stack, linear head.
// Prompt tokens are injected in embedding space by the caller; the
// prediction is read from the last token.
class Backbone : public Module {
 public:
  Backbone(const BackboneConfig& config, Rng& rng);

  // [B x input_dim] -> [B x 1 x n] for tabular rows, or
  // [B x W x input_dim] -> [B x W x n] plus sinusoidal positions for
  // windows. Steps before each example's valid length become the pad token.
  Tensor Embed(const Tensor& inputs,
               std::span<const std::size_t> lengths = {}) const;

  // tokens: [B x T x n]. Returns the head applied at `readout` (default:
  // last position), shaped [B x output_dim].
  Tensor Forward(const Tensor& tokens, const AttentionMask& mask = {},
                 std::optional<std::size_t> readout = std::nullopt) const;

  // Key mask for `prefix_tokens` always-visible prompt tokens followed by
  // right-aligned windows. Empty when nothing is padded.
  AttentionMask PaddingMask(std::size_t batch, std::size_t prefix_tokens,
                            std::size_t window,
                            std::span<const std::size_t> lengths) const;

  // Task loss: MSE for regression/forecasting, BCE on logits otherwise.
  Tensor Loss(const Tensor& outputs, const Tensor& targets) const;

  // Removes every parameter from gradient tracking for good.
  void Freeze();
  bool frozen() const { return frozen_; }
  std::uint64_t Checksum() const { return ParameterChecksum(Parameters()); }

  const BackboneConfig& config() const { return config_; }

  void CollectParameters(const std::string& prefix,
                         ParameterList& out) const override;

 private:
  BackboneConfig config_;
  LinearLayer embed_;
  std::vector<TransformerEncoderLayer> encoder_;
  LinearLayer head_;
  Tensor pad_token_;  // [n]; defined only for variable-length inputs
  bool frozen_ = false;
};

struct TrainingLog {
  struct Entry {
    std::size_t epoch = 0;
    int domain = 0;  // 0 for pooled phases
    double loss = 0.0;
    double validation_loss = -1.0;  // negative when not measured
  };
  std::string phase;
  std::vector<Entry> entries;

  std::string ToCsv() const;
};

struct PretrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;  // 0: full batch
  AdamOptions adam;
  std::uint64_t seed = 0;
  // Validation-loss early stopping; disabled when patience == 0 or no
  // validation set is given.
  std::size_t patience = 0;
  const DomainDataset* validation = nullptr;
};

// Fits the backbone on the pooled source training data, then freezes it.
TrainingLog Pretrain(Backbone& model, std::span<const DomainDataset> pooled,
                     const PretrainOptions& options);

// Row-index mini-batches over n examples in a seeded random order.
std::vector<std::vector<std::size_t>> ShuffledBatches(std::size_t n,
                                                      std::size_t batch_size,
                                                      Rng& rng);

// Throws NumericError if `loss` is not finite.
void CheckFinite(double loss, const std::string& where);

}  // namespace tempo

#endif  // TEMPO_BACKBONE_H_
