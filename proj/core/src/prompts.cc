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

#include "tempo/prompts.h"

#include <string>

#include "tempo/checkpoint.h"
#include "tempo/errors.h"

namespace tempo {

const char* PromptKindName(PromptKind kind) {
  switch (kind) {
    case PromptKind::kDomainSpecific: return "domain_specific";
    case PromptKind::kGeneral: return "general";
    case PromptKind::kTemporal: return "temporal";
  }
  return "unknown";
}

PromptVector InitPrompt(PromptKind kind, std::size_t tokens, std::size_t dim,
                        Rng& rng, std::optional<int> domain_index) {
  if (tokens == 0 || dim == 0) throw ConfigError("prompt size must be positive");
  if (kind == PromptKind::kDomainSpecific && (!domain_index || *domain_index < 1)) {
    throw ConfigError("domain-specific prompts need a domain index >= 1");
  }
  if (kind == PromptKind::kGeneral && domain_index) {
    throw ConfigError("the general prompt carries no domain index");
  }
  return {NormalTensor({tokens, dim}, kPromptInitStddev, rng, true), kind,
          domain_index};
}

Tensor Prepend(std::span<const Tensor> prompts, const Tensor& x_embedded) {
  if (x_embedded.rank() != 3) {
    throw ShapeError("Prepend: expected [B x T x n] input, got " +
                     ShapeToString(x_embedded.shape()));
  }
  if (prompts.empty()) return x_embedded;
  const std::size_t batch = x_embedded.dim(0), n = x_embedded.dim(2);
  std::vector<Tensor> parts;
  parts.reserve(prompts.size() + 1);
  for (const Tensor& p : prompts) {
    Tensor tokens = p.rank() == 1 ? Reshape(p, {1, p.dim(0)}) : p;
    if (tokens.rank() != 2 || tokens.dim(1) != n) {
      throw ShapeError("Prepend: prompt " + ShapeToString(p.shape()) +
                       " does not match embedding width " + std::to_string(n));
    }
    parts.push_back(Expand(tokens, batch));
  }
  parts.push_back(x_embedded);
  return Concat(parts, 1);
}

Tensor PromptedForward(const Backbone& backbone,
                       std::span<const Tensor> prompts, const Batch& batch) {
  Tensor x = backbone.Embed(batch.inputs, batch.lengths);
  std::size_t prefix = 0;
  for (const Tensor& p : prompts) prefix += p.rank() == 1 ? 1 : p.dim(0);
  AttentionMask mask =
      backbone.PaddingMask(x.dim(0), prefix, x.dim(1), batch.lengths);
  return backbone.Forward(Prepend(prompts, x), mask);
}

double PromptedLoss(const Backbone& backbone, std::span<const Tensor> prompts,
                    const DomainDataset& data) {
  if (data.size() == 0) throw DataError("PromptedLoss: empty dataset");
  NoGradGuard no_grad;
  Batch batch = FullBatch(data);
  return backbone.Loss(PromptedForward(backbone, prompts, batch), batch.targets)
      .item();
}

// ---------------------------------------------------------------------------

std::vector<Tensor> PromptBank::History() const {
  std::vector<Tensor> out;
  out.reserve(domain_prompts.size());
  for (const auto& [t, p] : domain_prompts) out.push_back(p.values);
  return out;
}

void PromptBank::CheckContiguous() const {
  int expected = 1;
  for (const auto& [t, p] : domain_prompts) {
    if (t != expected++) {
      throw StateError("prompt bank domain indices are not contiguous from 1");
    }
  }
}

namespace {
constexpr const char* kBankFile = "prompts";

std::string DomainKey(int t) { return "domain." + std::to_string(t); }
}  // namespace

void PromptBank::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  ParameterList params;
  nlohmann::json indices = nlohmann::json::array();
  for (const auto& [t, p] : domain_prompts) {
    params.emplace_back(DomainKey(t), p.values);
    indices.push_back(t);
  }
  if (general) params.emplace_back("general", general->values);
  nlohmann::json meta = metadata;
  meta["domain_indices"] = indices;
  meta["has_general"] = general.has_value();
  SaveCheckpoint(dir / kBankFile, params, meta);
}

PromptBank PromptBank::Load(const std::filesystem::path& dir) {
  Checkpoint ckpt = LoadCheckpoint(dir / kBankFile);
  std::map<std::string, Tensor> by_name;
  for (auto& [name, t] : ckpt.tensors) by_name[name] = t;
  auto take = [&](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw DataError("prompt bank is missing tensor '" + name + "'");
    }
    if (it->second.rank() != 2) {
      throw DataError("prompt tensor '" + name + "' is not [tokens x n]");
    }
    return it->second;
  };
  PromptBank bank;
  bank.metadata = ckpt.metadata;
  if (!bank.metadata.contains("domain_indices")) {
    throw DataError("prompt bank metadata has no domain_indices");
  }
  for (const auto& index : bank.metadata["domain_indices"]) {
    const int t = index.get<int>();
    bank.domain_prompts[t] = {take(DomainKey(t)), PromptKind::kDomainSpecific, t};
  }
  if (bank.metadata.value("has_general", false)) {
    bank.general = PromptVector{take("general"), PromptKind::kGeneral, {}};
  }
  bank.metadata.erase("domain_indices");
  bank.metadata.erase("has_general");
  return bank;
}

// ---------------------------------------------------------------------------

PromptVector LearnDomainPrompt(const Backbone& backbone,
                               const DomainDataset& domain,
                               const PromptLearningOptions& options,
                               TrainingLog* log) {
  if (!backbone.frozen()) {
    throw StateError("LearnDomainPrompt: backbone must be frozen first");
  }
  if (domain.size() == 0) {
    throw DataError("LearnDomainPrompt: domain " +
                    std::to_string(domain.domain_index) + " is empty");
  }
  const auto stream = static_cast<std::uint64_t>(domain.domain_index);
  Rng rng(DeriveSeed(options.seed, stream));
  PromptVector prompt =
      InitPrompt(PromptKind::kDomainSpecific, options.tokens,
                 backbone.config().embed_dim, rng, domain.domain_index);
  Adam adam(std::vector<Tensor>{prompt.values}, options.adam);
  const Tensor prompts[] = {prompt.values};

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& rows :
         ShuffledBatches(domain.size(), options.batch_size, rng)) {
      Batch batch = MakeBatch(domain, rows);
      Tensor loss = backbone.Loss(PromptedForward(backbone, prompts, batch),
                                  batch.targets);
      CheckFinite(loss.item(), "domain prompt learning");
      adam.ZeroGrad();
      Backward(loss);
      adam.Step();
      total += loss.item() * static_cast<double>(rows.size());
    }
    if (log) {
      log->entries.push_back({epoch + 1, domain.domain_index,
                              total / static_cast<double>(domain.size())});
    }
  }
  adam.ZeroGrad();
  return prompt;
}

}  // namespace tempo
