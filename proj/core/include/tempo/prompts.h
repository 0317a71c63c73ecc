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

// Learnable prompt tokens and their injection in front of embedded inputs.

#ifndef TEMPO_PROMPTS_H_
#define TEMPO_PROMPTS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempo/backbone.h"
#include "tempo/dataset.h"
#include "tempo/nn.h"

namespace tempo {

enum class PromptKind { kDomainSpecific, kGeneral, kTemporal };

const char* PromptKindName(PromptKind kind);

inline constexpr double kPromptInitStddev = 0.02;

struct PromptVector {
  Tensor values;  // [tokens x n]; one token unless configured otherwise
  PromptKind kind = PromptKind::kGeneral;
  std::optional<int> domain_index;

  std::size_t tokens() const { return values.dim(0); }
  std::size_t dim() const { return values.dim(1); }
};

// Fresh N(0, 0.02^2) prompt registered for gradients.
PromptVector InitPrompt(PromptKind kind, std::size_t tokens, std::size_t dim,
                        Rng& rng, std::optional<int> domain_index = {});

// x_embedded: [B x T x n]. Each prompt is [k_i x n]; the result is
// [B x (sum k_i + T) x n] with prompts first, in order, shared by every
// example. Inputs are not modified.
Tensor Prepend(std::span<const Tensor> prompts, const Tensor& x_embedded);

// Embeds the batch, prepends the prompts, masks padding, and runs the
// backbone with the readout on the last input token.
Tensor PromptedForward(const Backbone& backbone,
                       std::span<const Tensor> prompts, const Batch& batch);

// Mean task loss of the prompted model over a whole dataset, no tape.
double PromptedLoss(const Backbone& backbone, std::span<const Tensor> prompts,
                    const DomainDataset& data);

struct PromptBank {
  std::map<int, PromptVector> domain_prompts;  // keyed by domain index t
  std::optional<PromptVector> general;
  nlohmann::json metadata = nlohmann::json::object();

  // Domain prompt values ordered by t.
  std::vector<Tensor> History() const;
  // Throws StateError unless the keys are exactly 1..size().
  void CheckContiguous() const;

  // Writes `dir`/prompts.{json,bin}; domain indices live in the metadata.
  void Save(const std::filesystem::path& dir) const;
  static PromptBank Load(const std::filesystem::path& dir);
};

struct PromptLearningOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;  // 0: full batch
  std::size_t tokens = 1;
  AdamOptions adam;
  std::uint64_t seed = 0;
};

// Trains P_S(t) on one domain with the backbone frozen. Only the prompt is
// handed to the optimizer. Initialization and batch order derive from
// (seed, domain index), so domains can be learned in any order or in
// parallel.
PromptVector LearnDomainPrompt(const Backbone& backbone,
                               const DomainDataset& domain,
                               const PromptLearningOptions& options,
                               TrainingLog* log = nullptr);

}  // namespace tempo

#endif  // TEMPO_PROMPTS_H_
