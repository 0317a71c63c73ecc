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

// Time-indexed domain datasets, windowing, and partitioned CSV ingestion.

#ifndef TEMPO_DATASET_H_
#define TEMPO_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tempo/tensor.h"

namespace tempo {

enum class Split { kTrain, kInDomainTest, kValidation, kTargetTest };
enum class InputLayout { kTabular, kSequence };
enum class TaskKind { kRegression, kBinaryClassification, kForecasting };

const char* SplitName(Split split);
const char* TaskKindName(TaskKind kind);
TaskKind ParseTaskKind(const std::string& name);

// Labeled examples of one domain. Tabular rows become one token; sequence
// examples are `window` steps of `input_dim` features each.
struct DomainDataset {
  int domain_index = 0;
  Split split = Split::kTrain;
  InputLayout layout = InputLayout::kTabular;
  std::size_t input_dim = 0;
  std::size_t window = 1;
  std::size_t output_dim = 0;
  std::vector<double> inputs;   // examples x window x input_dim
  std::vector<double> targets;  // examples x output_dim
  // Valid (right-aligned) steps per example; empty means all `window`.
  std::vector<std::size_t> lengths;

  std::size_t size() const;
  std::size_t example_stride() const { return window * input_dim; }
  // Throws DataError on inconsistent sizes or non-finite values.
  void Validate() const;
  DomainDataset Subset(std::span<const std::size_t> rows) const;
};

struct Batch {
  Tensor inputs;   // [B x input_dim] (tabular) or [B x window x input_dim]
  Tensor targets;  // [B x output_dim]
  std::vector<std::size_t> lengths;
};

Batch MakeBatch(const DomainDataset& data, std::span<const std::size_t> rows);
Batch FullBatch(const DomainDataset& data);

// Source domains 1..tau (train and in-domain test splits) followed by
// target domains tau+1.. which are only ever used for evaluation.
struct DomainSequence {
  std::vector<DomainDataset> source_train;
  std::vector<DomainDataset> source_test;
  std::vector<DomainDataset> targets;
  TaskKind task = TaskKind::kForecasting;

  std::size_t num_sources() const { return source_train.size(); }
};

// First floor(n * train_fraction) rows go to train, the rest to the
// in-domain test split.
std::pair<DomainDataset, DomainDataset> SplitHead(const DomainDataset& data,
                                                  double train_fraction);

// ---------------------------------------------------------------------------
// Windowing.

// One domain's raw multivariate series, row-major [time x num_features].
struct SeriesDomain {
  int domain_index = 0;
  std::size_t num_features = 1;
  std::vector<double> values;
  // Forecast target per time step; when empty, column `target_feature` of
  // `values` is used.
  std::vector<double> target_values;
  std::size_t target_feature = 0;

  std::size_t length() const { return values.size() / num_features; }
  double target_at(std::size_t t) const {
    return target_values.empty() ? values[t * num_features + target_feature]
                                 : target_values[t];
  }
};

struct WindowOptions {
  std::size_t window = 20;
  std::size_t horizon = 1;
  std::size_t stride = 1;
  // Variable mode draws each example's valid length uniformly from
  // [ceil(window / 2), window]; the window stays right-aligned.
  bool fixed_length = true;
  std::uint64_t seed = 0;
};

std::size_t WindowCount(std::size_t length, const WindowOptions& options);
DomainDataset WindowSeries(const SeriesDomain& series,
                           const WindowOptions& options);

// ---------------------------------------------------------------------------
// Partitioned CSV ingestion.

struct DatasetManifest {
  std::vector<std::filesystem::path> files;
  std::string domain_column;
  // "value": distinct values of the domain column, sorted; "month": the
  // YYYY-MM prefix of an ISO timestamp.
  std::string bucket = "value";
  std::vector<std::string> target_columns;
  std::vector<std::string> feature_columns;  // empty: all other columns
  TaskKind task = TaskKind::kRegression;
  double train_fraction = 0.9;
  // Domains after the first `num_source_domains` become targets. Zero means
  // all but the last.
  std::size_t num_source_domains = 0;
  bool standardize = true;
  WindowOptions windows;  // forecasting only

  // Reads an INI-style manifest; relative file paths resolve against the
  // manifest's directory.
  static DatasetManifest FromFile(const std::filesystem::path& path);
};

// Raw CSV contents with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based file line of each row

  std::size_t ColumnIndex(const std::string& name) const;
};

CsvTable ReadCsv(const std::filesystem::path& path);

DomainSequence LoadPartitioned(const DatasetManifest& manifest);

}  // namespace tempo

#endif  // TEMPO_DATASET_H_
