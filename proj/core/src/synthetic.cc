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

#include "tempo/synthetic.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "tempo/errors.h"

namespace tempo {

void MackeyGlassParams::Validate() const {
  if (sigma < 1) throw ConfigError("Mackey-Glass delay must be >= 1");
  if (!std::isfinite(beta) || !std::isfinite(gamma) ||
      !std::isfinite(exponent) || !std::isfinite(init_value)) {
    throw ConfigError("Mackey-Glass parameters must be finite");
  }
  if (t_max == 0) throw ConfigError("Mackey-Glass t_max must be positive");
}

std::vector<double> MackeyGlass(const MackeyGlassParams& params) {
  params.Validate();
  std::vector<double> x(params.t_max, params.init_value);
  for (std::size_t t = params.sigma; t + 1 < params.t_max; ++t) {
    const double lagged = x[t - params.sigma];
    x[t + 1] = x[t] + params.beta * lagged /
                          (1.0 + std::pow(lagged, params.exponent)) -
               params.gamma * x[t];
  }
  return x;
}

void CosineWaveParams::Validate() const {
  if (alpha == 0.0 || beta == 0.0) {
    throw ConfigError("cosine wave alpha and beta must be non-zero");
  }
}

double CosineWave(const CosineWaveParams& p, double t) {
  constexpr double kPi = std::numbers::pi;
  return std::cos(p.a + kPi * p.h * t / p.alpha) +
         std::cos(p.b + kPi * t / p.beta);
}

std::vector<double> CosineSeries(const CosineWaveParams& params) {
  params.Validate();
  std::vector<double> x(params.t_max);
  for (std::size_t t = 0; t < params.t_max; ++t) {
    x[t] = CosineWave(params, static_cast<double>(t));
  }
  return x;
}

double DriftAddition(int domain, double t) {
  constexpr double kPi = std::numbers::pi;
  const double i = static_cast<double>(domain);
  return 0.5 * std::cos(100.0 * i + kPi * (i + 1.0) * t / 300.0);
}

SeriesFamily ParseSeriesFamily(const std::string& name) {
  if (name == "mackey_glass") return SeriesFamily::kMackeyGlass;
  if (name == "cosine") return SeriesFamily::kCosine;
  throw ConfigError("unknown series family '" + name + "'");
}

DriftKind ParseDriftKind(const std::string& name) {
  if (name == "mg_sigma_alternation") return DriftKind::kMgSigmaAlternation;
  if (name == "cos_phase_freq_alternation") {
    return DriftKind::kCosPhaseFreqAlternation;
  }
  if (name == "cosine_addition") return DriftKind::kCosineAddition;
  if (name == "alternation_plus_addition") {
    return DriftKind::kAlternationPlusAddition;
  }
  throw ConfigError("unknown drift schedule '" + name + "'");
}

const char* SeriesFamilyName(SeriesFamily family) {
  return family == SeriesFamily::kMackeyGlass ? "mackey_glass" : "cosine";
}

const char* DriftKindName(DriftKind kind) {
  switch (kind) {
    case DriftKind::kMgSigmaAlternation: return "mg_sigma_alternation";
    case DriftKind::kCosPhaseFreqAlternation: return "cos_phase_freq_alternation";
    case DriftKind::kCosineAddition: return "cosine_addition";
    case DriftKind::kAlternationPlusAddition: return "alternation_plus_addition";
  }
  return "unknown";
}

MackeyGlassParams MackeyGlassForDomain(DriftKind drift, int domain) {
  if (domain < 0) throw ConfigError("domain index must be >= 0");
  MackeyGlassParams p;
  switch (drift) {
    case DriftKind::kMgSigmaAlternation:
    case DriftKind::kAlternationPlusAddition:
      p.sigma = 8 + 2 * static_cast<std::size_t>(domain);
      break;
    case DriftKind::kCosineAddition:
      break;
    case DriftKind::kCosPhaseFreqAlternation:
      throw ConfigError("cosine alternation does not apply to Mackey-Glass");
  }
  return p;
}

CosineWaveParams CosineForDomain(DriftKind drift, int domain) {
  if (domain < 0) throw ConfigError("domain index must be >= 0");
  CosineWaveParams p;
  switch (drift) {
    case DriftKind::kCosPhaseFreqAlternation:
    case DriftKind::kAlternationPlusAddition:
      p.a = domain;
      p.h = domain + 1;
      break;
    case DriftKind::kCosineAddition:
      break;
    case DriftKind::kMgSigmaAlternation:
      throw ConfigError("sigma alternation does not apply to cosine waves");
  }
  return p;
}

std::vector<double> DomainSeries(SeriesFamily family, DriftKind drift,
                                 int domain) {
  std::vector<double> x = family == SeriesFamily::kMackeyGlass
                              ? MackeyGlass(MackeyGlassForDomain(drift, domain))
                              : CosineSeries(CosineForDomain(drift, domain));
  if (drift == DriftKind::kCosineAddition ||
      drift == DriftKind::kAlternationPlusAddition) {
    for (std::size_t t = 0; t < x.size(); ++t) {
      x[t] += DriftAddition(domain, static_cast<double>(t));
    }
  }
  return x;
}

std::vector<DomainDataset> BuildDomains(const SyntheticOptions& options) {
  if (options.num_domains < 2) {
    throw ConfigError("synthetic data needs at least two domains");
  }
  std::vector<DomainDataset> domains;
  for (std::size_t i = 0; i < options.num_domains; ++i) {
    const int domain = static_cast<int>(i);
    SeriesDomain series;
    series.domain_index = domain + 1;
    series.values = DomainSeries(options.family, options.drift, domain);
    if (options.task == SyntheticTask::kThresholdClassification) {
      const double threshold =
          options.threshold_start + options.threshold_step * domain;
      series.target_values.resize(series.values.size());
      for (std::size_t t = 0; t < series.values.size(); ++t) {
        series.target_values[t] = series.values[t] > threshold ? 1.0 : 0.0;
      }
    }
    WindowOptions w = options.windows;
    if (options.task == SyntheticTask::kThresholdClassification) w.horizon = 1;
    domains.push_back(WindowSeries(series, w));
  }
  return domains;
}

DomainSequence MakeSequence(std::vector<DomainDataset> domains,
                            std::size_t num_sources, double train_fraction,
                            TaskKind task) {
  if (num_sources < 1 || num_sources >= domains.size()) {
    throw ConfigError("need 1 <= source domains < total domains");
  }
  DomainSequence seq;
  seq.task = task;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (i < num_sources) {
      auto [train, test] = SplitHead(domains[i], train_fraction);
      seq.source_train.push_back(std::move(train));
      seq.source_test.push_back(std::move(test));
    } else {
      domains[i].split = Split::kTargetTest;
      seq.targets.push_back(std::move(domains[i]));
    }
  }
  return seq;
}

namespace {

std::string Fmt(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

nlohmann::json DomainParams(const SyntheticOptions& options, int domain) {
  if (options.family == SeriesFamily::kMackeyGlass) {
    const MackeyGlassParams p = MackeyGlassForDomain(options.drift, domain);
    return {{"beta", p.beta},         {"gamma", p.gamma},
            {"exponent", p.exponent}, {"sigma", p.sigma},
            {"t_max", p.t_max},       {"init_value", p.init_value}};
  }
  const CosineWaveParams p = CosineForDomain(options.drift, domain);
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"a", p.a},
          {"b", p.b},         {"h", p.h},       {"t_max", p.t_max}};
}

}  // namespace

void WriteSyntheticData(const SyntheticOptions& options,
                        const std::filesystem::path& dir) {
  const std::vector<DomainDataset> domains = BuildDomains(options);
  try {
    std::filesystem::create_directories(dir);
  } catch (const std::filesystem::filesystem_error& e) {
    throw DataError("cannot create " + dir.string() + ": " + e.what());
  }
  const bool threshold =
      options.task == SyntheticTask::kThresholdClassification;
  nlohmann::json manifest = {
      {"family", SeriesFamilyName(options.family)},
      {"drift", DriftKindName(options.drift)},
      {"num_domains", options.num_domains},
      {"task", threshold ? "threshold" : "forecast"},
      {"windows",
       {{"window", options.windows.window},
        {"horizon", threshold ? std::size_t{1} : options.windows.horizon},
        {"stride", options.windows.stride},
        {"fixed_length", options.windows.fixed_length},
        {"seed", options.windows.seed}}}};
  if (threshold) {
    manifest["threshold_start"] = options.threshold_start;
    manifest["threshold_step"] = options.threshold_step;
  }
  manifest["domains"] = nlohmann::json::array();

  for (std::size_t i = 0; i < domains.size(); ++i) {
    const int domain = static_cast<int>(i);
    const std::string stem = "domain_" + std::to_string(i + 1);
    const std::vector<double> series =
        DomainSeries(options.family, options.drift, domain);
    std::string text = "t,x\n";
    for (std::size_t t = 0; t < series.size(); ++t) {
      text += std::to_string(t) + "," + Fmt(series[t]) + "\n";
    }
    WriteText(dir / (stem + ".csv"), text);

    const DomainDataset& d = domains[i];
    text.clear();
    for (std::size_t c = 0; c < d.example_stride(); ++c) {
      text += (c ? ",x" : "x") + std::to_string(c);
    }
    for (std::size_t c = 0; c < d.output_dim; ++c) {
      text += ",y" + std::to_string(c);
    }
    if (!d.lengths.empty()) text += ",length";
    text += "\n";
    for (std::size_t e = 0; e < d.size(); ++e) {
      for (std::size_t c = 0; c < d.example_stride(); ++c) {
        if (c) text += ',';
        text += Fmt(d.inputs[e * d.example_stride() + c]);
      }
      for (std::size_t c = 0; c < d.output_dim; ++c) {
        text += "," + Fmt(d.targets[e * d.output_dim + c]);
      }
      if (!d.lengths.empty()) text += "," + std::to_string(d.lengths[e]);
      text += "\n";
    }
    WriteText(dir / (stem + "_pairs.csv"), text);

    nlohmann::json entry = {{"domain_index", d.domain_index},
                            {"series", stem + ".csv"},
                            {"pairs", stem + "_pairs.csv"},
                            {"examples", d.size()},
                            {"params", DomainParams(options, domain)}};
    if (threshold) {
      entry["threshold"] =
          options.threshold_start + options.threshold_step * domain;
    }
    manifest["domains"].push_back(std::move(entry));
  }
  WriteText(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace tempo
