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

#include "tempo/metrics.h"

#include <cmath>

#include "tempo/errors.h"

namespace tempo {

MetricKind ParseMetricKind(const std::string& name) {
  if (name == "mse") return MetricKind::kMse;
  if (name == "mae") return MetricKind::kMae;
  if (name == "error_pct") return MetricKind::kClassificationErrorPct;
  if (name == "rmse_x1e3") return MetricKind::kRmseX1e3;
  throw ConfigError("unknown metric '" + name + "'");
}

const char* MetricKindName(MetricKind kind) {
  switch (kind) {
    case MetricKind::kMse: return "mse";
    case MetricKind::kMae: return "mae";
    case MetricKind::kClassificationErrorPct: return "error_pct";
    case MetricKind::kRmseX1e3: return "rmse_x1e3";
  }
  return "unknown";
}

double ComputeMetric(std::span<const double> predictions,
                     std::span<const double> targets, MetricKind kind) {
  if (predictions.size() != targets.size()) {
    throw DataError("metric: " + std::to_string(predictions.size()) +
                    " predictions for " + std::to_string(targets.size()) +
                    " targets");
  }
  if (predictions.empty()) throw DataError("metric: empty input");
  const double n = static_cast<double>(predictions.size());
  double acc = 0.0;
  switch (kind) {
    case MetricKind::kMse:
    case MetricKind::kRmseX1e3:
      for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        acc += d * d;
      }
      acc /= n;
      return kind == MetricKind::kMse ? acc : std::sqrt(acc) * 1000.0;
    case MetricKind::kMae:
      for (std::size_t i = 0; i < predictions.size(); ++i) {
        acc += std::abs(predictions[i] - targets[i]);
      }
      return acc / n;
    case MetricKind::kClassificationErrorPct:
      for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double label = predictions[i] > 0.0 ? 1.0 : 0.0;
        if (label != (targets[i] > 0.5 ? 1.0 : 0.0)) acc += 1.0;
      }
      return 100.0 * acc / n;
  }
  return 0.0;
}

Summary Aggregate(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

MetricRecord MakeRecord(std::string dataset, std::string setting,
                        std::string method, std::string domain,
                        MetricKind kind, std::vector<double> values) {
  Summary s = Aggregate(values);
  MetricRecord r;
  r.dataset = std::move(dataset);
  r.setting = std::move(setting);
  r.method = std::move(method);
  r.domain = std::move(domain);
  r.kind = kind;
  r.mean = s.mean;
  r.std = s.std;
  r.runs = s.count;
  r.values = std::move(values);
  return r;
}

}  // namespace tempo
