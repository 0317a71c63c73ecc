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

// Deterministic drifting series: discrete Mackey-Glass and sum-of-cosines,
// with per-domain parameter alternation and/or an added domain cosine.
// Nothing here is random.

#ifndef TEMPO_SYNTHETIC_H_
#define TEMPO_SYNTHETIC_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "tempo/dataset.h"

namespace tempo {

struct MackeyGlassParams {
  double beta = 0.2;
  double gamma = 0.1;
  double exponent = 15.0;
  std::size_t sigma = 18;  // delay
  std::size_t t_max = 2600;
  double init_value = 0.1;

  void Validate() const;
};

// x(t) = init_value for t <= sigma, then
// x(t+1) = x(t) + beta x(t-sigma) / (1 + x(t-sigma)^exponent) - gamma x(t).
std::vector<double> MackeyGlass(const MackeyGlassParams& params);

struct CosineWaveParams {
  double alpha = 100.0;
  double beta = 13.0;
  double a = 40.0;
  double b = 10.0;
  double h = 1.0;
  std::size_t t_max = 2600;

  void Validate() const;
};

// cos(a + pi h t / alpha) + cos(b + pi t / beta).
double CosineWave(const CosineWaveParams& params, double t);
// CosineWave at t = 0, 1, ..., t_max - 1.
std::vector<double> CosineSeries(const CosineWaveParams& params);

// 0.5 cos(100 i + pi (i + 1) t / 300); phase in radians.
double DriftAddition(int domain, double t);

enum class SeriesFamily { kMackeyGlass, kCosine };
enum class DriftKind {
  kMgSigmaAlternation,       // sigma = 8 + 2i
  kCosPhaseFreqAlternation,  // a = i, h = i + 1
  kCosineAddition,           // base series + DriftAddition(i, t)
  kAlternationPlusAddition,  // the family's alternation, then the addition
};

SeriesFamily ParseSeriesFamily(const std::string& name);
DriftKind ParseDriftKind(const std::string& name);
const char* SeriesFamilyName(SeriesFamily family);
const char* DriftKindName(DriftKind kind);

// Parameters for domain i (0-based) under a schedule.
MackeyGlassParams MackeyGlassForDomain(DriftKind drift, int domain);
CosineWaveParams CosineForDomain(DriftKind drift, int domain);

// The raw series of domain i.
std::vector<double> DomainSeries(SeriesFamily family, DriftKind drift,
                                 int domain);

// Synthetic labels: forecast the next `horizon` values, or classify whether
// the next value exceeds a threshold that moves by `threshold_step` per
// domain (a drifting binary-threshold task).
enum class SyntheticTask { kForecast, kThresholdClassification };

struct SyntheticOptions {
  SeriesFamily family = SeriesFamily::kMackeyGlass;
  DriftKind drift = DriftKind::kMgSigmaAlternation;
  std::size_t num_domains = 20;
  WindowOptions windows;
  SyntheticTask task = SyntheticTask::kForecast;
  double threshold_start = 0.0;
  double threshold_step = 0.05;
};

// One windowed dataset per domain, domain_index = i + 1, split = train.
std::vector<DomainDataset> BuildDomains(const SyntheticOptions& options);

// Splits the first `num_sources` domains into train / in-domain test and
// marks the rest as targets.
DomainSequence MakeSequence(std::vector<DomainDataset> domains,
                            std::size_t num_sources, double train_fraction,
                            TaskKind task);

// Writes domain_<i>.csv (t, x), domain_<i>_pairs.csv (windowed inputs and
// targets) for every domain, plus manifest.json holding the family, drift
// schedule, per-domain generator parameters and windowing options.
void WriteSyntheticData(const SyntheticOptions& options,
                        const std::filesystem::path& dir);

}  // namespace tempo

#endif  // TEMPO_SYNTHETIC_H_
