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

#ifndef TEMPO_METRICS_H_
#define TEMPO_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tempo {

enum class MetricKind { kMse, kMae, kClassificationErrorPct, kRmseX1e3 };

MetricKind ParseMetricKind(const std::string& name);
const char* MetricKindName(MetricKind kind);

// Classification error treats `predictions` as logits: a positive logit
// (sigmoid > 0.5) predicts class 1.
double ComputeMetric(std::span<const double> predictions,
                     std::span<const double> targets, MetricKind kind);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample std (n - 1); 0 for a single value
  std::size_t count = 0;
};

Summary Aggregate(std::span<const double> values);

struct MetricRecord {
  std::string dataset;
  std::string setting;  // ablation cell, empty for the main grid
  std::string method;   // vanilla, ours, ours_no_PG, ours_no_PT, ...
  std::string domain;   // target domain index, or "mean" over targets
  MetricKind kind = MetricKind::kMse;
  double mean = 0.0;
  double std = 0.0;
  std::size_t runs = 0;
  // Per-run values in run order.
  std::vector<double> values;
};

MetricRecord MakeRecord(std::string dataset, std::string setting,
                        std::string method, std::string domain,
                        MetricKind kind, std::vector<double> values);

}  // namespace tempo

#endif  // TEMPO_METRICS_H_
