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

// Multi-seed experiment runs, ablation grids and report emission.

#ifndef TEMPO_EXPERIMENT_H_
#define TEMPO_EXPERIMENT_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tempo/metrics.h"
#include "tempo/pipeline.h"

namespace tempo {

// First output column of every example of one target domain, from the
// first run.
struct PredictionTrace {
  std::string dataset;
  std::string setting;
  int domain = 0;
  std::vector<double> truth;
  std::map<std::string, std::vector<double>> predictions;  // by method
};

struct ParameterCounts {
  std::string setting;
  std::size_t backbone = 0;
  std::size_t generator = 0;
  std::size_t general_prompt = 0;
  std::size_t domain_prompts = 0;  // tau prompts

  std::size_t added() const {
    return generator + general_prompt + domain_prompts;
  }
};

struct ExperimentResult {
  std::vector<MetricRecord> records;
  std::vector<PredictionTrace> traces;
  std::vector<ParameterCounts> parameters;

  void Append(ExperimentResult other);
};

// Parameter counts for a config, computed from freshly built modules.
ParameterCounts CountExperimentParameters(const ExperimentConfig& config,
                                          const DomainSequence& data);
// Same, with input and output widths taken from the [backbone] section, for
// configs whose data is not at hand.
ParameterCounts CountExperimentParameters(const ExperimentConfig& config,
                                          std::size_t num_sources);

// config.runs seeds (seed, seed + 1, ...), each running the phases once and
// evaluating every method in config.methods on every target domain. Runs
// are spread over config.threads workers; results do not depend on it.
ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const std::string& setting = "");

inline const std::vector<std::string>& AblationAxes() {
  static const std::vector<std::string> axes{
      "prompt_components", "num_domains", "prompt_size", "generator_layers"};
  return axes;
}

// One experiment per cell of `axis`. Cell values come from the [ablation]
// section (same key as the axis) or the defaults:
//   prompt_components  both, pt_only, pg_only (one shared run per seed)
//   num_domains        4, 19, 49 source domains
//   prompt_size        16, 32, 64 (embedding = prompt width)
//   generator_layers   1, 2, 3
ExperimentResult RunAblation(const ExperimentConfig& config,
                             const std::string& axis);

// Writes records.csv, report.txt, parameters.csv and plots/*.svg. Output
// is a pure function of `result`.
void EmitReport(const ExperimentResult& result,
                const std::filesystem::path& out_dir);

std::string RecordsCsv(const std::vector<MetricRecord>& records);
std::string RecordsTable(const std::vector<MetricRecord>& records);
std::string TraceSvg(const PredictionTrace& trace);

}  // namespace tempo

#endif  // TEMPO_EXPERIMENT_H_
