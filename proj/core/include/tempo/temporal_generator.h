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

#ifndef TEMPO_TEMPORAL_GENERATOR_H_
#define TEMPO_TEMPORAL_GENERATOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempo/nn.h"

namespace tempo {

class KeyValueFile;

enum class GeneratorMode { kSequential, kNonSequential };

GeneratorMode ParseGeneratorMode(const std::string& name);
const char* GeneratorModeName(GeneratorMode mode);

struct GeneratorConfig {
  std::size_t prompt_dim = 64;  // n, the backbone embedding width
  // Width inside the encoder. 0 or prompt_dim runs the encoder directly on
  // the prompts; anything else adds linear maps n -> model_dim -> n.
  std::size_t model_dim = 0;
  std::size_t num_heads = 1;
  std::size_t hidden_dim = 128;
  std::size_t num_layers = 1;
  int ff_depth = 2;
  std::size_t prompt_tokens = 1;
  GeneratorMode mode = GeneratorMode::kSequential;

  std::size_t width() const { return model_dim == 0 ? prompt_dim : model_dim; }
  bool projected() const { return width() != prompt_dim; }
  void Validate() const;
  // Reads the [generator] section; absent keys keep the current values.
  void Update(const KeyValueFile& file);
};

// g_w: maps past domain prompts P_S(1..t-1) to the temporal prompt P_T(t).
// History tokens get sinusoidal encodings over their sequence position and
// the prompt is read from the last history position(s).
class TemporalGenerator : public Module {
 public:
  TemporalGenerator(const GeneratorConfig& config, Rng& rng);

  // history: prompts [tokens x n] in domain order, at least one.
  // Returns [tokens x n].
  Tensor Generate(std::span<const Tensor> history) const;

  // One causally masked pass. Output i is P_T(i + 2), i.e. it only sees
  // history[0..i]. Requires non-sequential mode.
  std::vector<Tensor> GenerateAllCausal(std::span<const Tensor> history) const;

  const GeneratorConfig& config() const { return config_; }

  void CollectParameters(const std::string& prefix,
                         ParameterList& out) const override;

 private:
  // [1 x L*tokens x n] -> encoder output [L*tokens x n].
  Tensor Encode(std::span<const Tensor> history, const AttentionMask& mask) const;

  GeneratorConfig config_;
  std::optional<LinearLayer> in_;
  std::vector<TransformerEncoderLayer> encoder_;
  std::optional<LinearLayer> out_;
};

}  // namespace tempo

#endif  // TEMPO_TEMPORAL_GENERATOR_H_
