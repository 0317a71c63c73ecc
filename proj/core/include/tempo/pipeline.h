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

// The three training phases (backbone pretraining, per-domain prompts,
// temporal generator + general prompt) and target-domain inference.

#ifndef TEMPO_PIPELINE_H_
#define TEMPO_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tempo/backbone.h"
#include "tempo/config.h"
#include "tempo/dataset.h"
#include "tempo/metrics.h"
#include "tempo/prompts.h"
#include "tempo/synthetic.h"
#include "tempo/temporal_generator.h"

namespace tempo {

struct PhaseOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;  // 0: full batch
  double lr = 1e-4;
  std::size_t patience = 0;     // pretraining only; 0 disables early stop

  AdamOptions adam() const { return AdamOptions{lr}; }
};

struct DataSpec {
  std::string source = "synthetic";  // "synthetic" or "csv"
  SyntheticOptions synthetic;
  // Number of source domains; 0 means all but the last.
  std::size_t num_sources = 0;
  double train_fraction = 0.9;
  std::filesystem::path manifest;  // csv only
};

// Which prompt tokens are live in Phase 3 and at inference. A disabled
// token keeps its position but is held at zero.
struct PromptComponents {
  bool general = true;
  bool temporal = true;

  static PromptComponents Parse(const std::string& name);
  std::string Name() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DataSpec data;
  BackboneConfig backbone;
  GeneratorConfig generator;
  PhaseOptions pretrain{50, 32, 1e-4, 0};
  PhaseOptions prompts{100, 32, 1e-4, 0};
  PhaseOptions temporal{50, 32, 1e-4, 0};
  std::size_t prompt_tokens = 1;
  std::uint64_t seed = 0;
  std::size_t runs = 3;
  std::size_t threads = 1;
  // Later target domains get prompts generated from the history extended
  // with earlier generated prompts instead of reusing P_T(tau+1).
  bool autoregressive_targets = false;
  PromptComponents components;
  MetricKind metric = MetricKind::kMse;
  std::vector<std::string> methods{"vanilla", "ours"};
  // The parsed file, kept for ablation axes and artifact provenance.
  KeyValueFile source;

  static ExperimentConfig FromFile(const std::filesystem::path& path);
  static ExperimentConfig FromKeyValue(const KeyValueFile& file);
  void Validate() const;
};

// Builds the domain sequence described by `config.data`.
DomainSequence LoadData(const ExperimentConfig& config);

// Backbone config with input/output widths, task and padding support taken
// from the data.
BackboneConfig ResolveBackbone(const ExperimentConfig& config,
                               const DomainSequence& data);
GeneratorConfig ResolveGenerator(const ExperimentConfig& config,
                                 const BackboneConfig& backbone);

struct TrainedArtifacts {
  std::shared_ptr<Backbone> backbone;
  PromptBank bank;
  std::unique_ptr<TemporalGenerator> generator;  // null when unused
  PromptComponents components;
  bool autoregressive_targets = false;
  std::vector<TrainingLog> logs;

  std::size_t num_sources() const { return bank.domain_prompts.size(); }

  // Layout: backbone/, prompts/, generator/, logs/ plus artifacts.json.
  void Save(const std::filesystem::path& dir) const;
  static TrainedArtifacts Load(const std::filesystem::path& dir);
};

std::shared_ptr<Backbone> RunPhase1Pretrain(const ExperimentConfig& config,
                                            const DomainSequence& data,
                                            std::uint64_t seed,
                                            TrainingLog* log = nullptr);

PromptBank RunPhase2DomainPrompts(const ExperimentConfig& config,
                                  const Backbone& backbone,
                                  const DomainSequence& data,
                                  std::uint64_t seed,
                                  TrainingLog* log = nullptr);

struct TemporalResult {
  std::unique_ptr<TemporalGenerator> generator;  // null if temporal is off
  std::optional<PromptVector> general;
  TrainingLog log;
};

TemporalResult RunPhase3Temporal(const ExperimentConfig& config,
                                 const Backbone& backbone,
                                 const PromptBank& bank,
                                 const DomainSequence& data,
                                 std::uint64_t seed,
                                 PromptComponents components,
                                 GeneratorMode mode);

// Full three-phase training for one seed.
TrainedArtifacts TrainAll(const ExperimentConfig& config,
                          const DomainSequence& data, std::uint64_t seed);

// The [P_T; P_G] prompt pair for target domain tau + 1 + offset. Disabled
// components are zero tokens.
std::vector<Tensor> TargetPrompts(const TrainedArtifacts& artifacts,
                                  std::size_t offset = 0);

// Predictions [B x output_dim] for the inputs of target domain
// tau + 1 + offset. Creates and updates no parameters.
Tensor InferTarget(const TrainedArtifacts& artifacts,
                   const DomainDataset& target, std::size_t offset = 0);

// The frozen backbone alone on a dataset.
Tensor PredictVanilla(const Backbone& backbone, const DomainDataset& data);

}  // namespace tempo

#endif  // TEMPO_PIPELINE_H_
