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

#include "tempo/experiment.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tempo/errors.h"
#include "tempo/parallel.h"

namespace tempo {

void ExperimentResult::Append(ExperimentResult other) {
  for (auto& r : other.records) records.push_back(std::move(r));
  for (auto& t : other.traces) traces.push_back(std::move(t));
  for (auto& p : other.parameters) parameters.push_back(std::move(p));
}

namespace {

ParameterCounts CountFor(const ExperimentConfig& config,
                         const BackboneConfig& bc, std::size_t num_sources) {
  Rng rng(0);
  GeneratorConfig gc = ResolveGenerator(config, bc);
  ParameterCounts counts;
  counts.backbone = CountParameters(Backbone(bc, rng));
  const std::size_t prompt = config.prompt_tokens * bc.embed_dim;
  counts.domain_prompts = prompt * num_sources;
  if (config.components.temporal) {
    counts.generator = CountParameters(TemporalGenerator(gc, rng));
  }
  if (config.components.general) counts.general_prompt = prompt;
  return counts;
}

}  // namespace

ParameterCounts CountExperimentParameters(const ExperimentConfig& config,
                                          const DomainSequence& data) {
  return CountFor(config, ResolveBackbone(config, data), data.num_sources());
}

ParameterCounts CountExperimentParameters(const ExperimentConfig& config,
                                          std::size_t num_sources) {
  config.backbone.Validate();
  return CountFor(config, config.backbone, num_sources);
}

namespace {

struct MethodPlan {
  PromptComponents components;
  GeneratorMode mode;
};

MethodPlan PlanFor(const std::string& method, const ExperimentConfig& c) {
  if (method == "ours") return {c.components, c.generator.mode};
  if (method == "ours_no_PG") return {{false, true}, c.generator.mode};
  if (method == "ours_no_PT") return {{true, false}, c.generator.mode};
  if (method == "ours_nonsequential") {
    return {c.components, GeneratorMode::kNonSequential};
  }
  throw ConfigError("no prompt plan for method '" + method + "'");
}

// Per method, per target domain.
struct RunOutput {
  std::vector<std::vector<double>> metrics;
  std::vector<std::vector<std::vector<double>>> first_column;
};

std::vector<double> FirstColumn(const Tensor& t) {
  const std::size_t rows = t.dim(0), cols = t.dim(1);
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = t.at(i * cols);
  return out;
}

RunOutput RunOnce(const ExperimentConfig& config, const DomainSequence& data,
                  std::uint64_t seed) {
  RunOutput out;
  std::shared_ptr<Backbone> backbone = RunPhase1Pretrain(config, data, seed);
  const bool prompted = std::any_of(
      config.methods.begin(), config.methods.end(),
      [](const std::string& m) { return m != "vanilla"; });
  PromptBank bank;
  if (prompted) bank = RunPhase2DomainPrompts(config, *backbone, data, seed);

  for (const std::string& method : config.methods) {
    std::vector<Tensor> predictions;
    if (method == "vanilla") {
      for (const auto& target : data.targets) {
        predictions.push_back(PredictVanilla(*backbone, target));
      }
    } else {
      const MethodPlan plan = PlanFor(method, config);
      TemporalResult temporal = RunPhase3Temporal(
          config, *backbone, bank, data, seed, plan.components, plan.mode);
      TrainedArtifacts a;
      a.backbone = backbone;
      a.bank = bank;
      a.bank.general = std::move(temporal.general);
      a.generator = std::move(temporal.generator);
      a.components = plan.components;
      a.autoregressive_targets = config.autoregressive_targets;
      for (std::size_t j = 0; j < data.targets.size(); ++j) {
        predictions.push_back(InferTarget(a, data.targets[j], j));
      }
    }
    std::vector<double> metrics;
    std::vector<std::vector<double>> columns;
    for (std::size_t j = 0; j < data.targets.size(); ++j) {
      metrics.push_back(ComputeMetric(predictions[j].data(),
                                      data.targets[j].targets, config.metric));
      columns.push_back(FirstColumn(predictions[j]));
    }
    out.metrics.push_back(std::move(metrics));
    out.first_column.push_back(std::move(columns));
  }
  return out;
}

}  // namespace

ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const std::string& setting) {
  config.Validate();
  const DomainSequence data = LoadData(config);
  if (data.targets.empty()) throw DataError("no target domains to evaluate");

  ExperimentConfig inner = config;
  const bool outer_parallel = config.threads > 1 && config.runs > 1;
  if (outer_parallel) inner.threads = 1;
  std::vector<RunOutput> runs(config.runs);
  ParallelFor(config.runs, outer_parallel ? config.threads : 1,
              [&](std::size_t r) { runs[r] = RunOnce(inner, data, config.seed + r); });

  ExperimentResult result;
  ParameterCounts counts = CountExperimentParameters(config, data);
  counts.setting = setting;
  result.parameters.push_back(counts);

  const std::size_t targets = data.targets.size();
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    for (std::size_t j = 0; j < targets; ++j) {
      std::vector<double> values;
      for (const RunOutput& run : runs) values.push_back(run.metrics[m][j]);
      result.records.push_back(MakeRecord(
          config.name, setting, config.methods[m],
          std::to_string(data.targets[j].domain_index), config.metric,
          std::move(values)));
    }
    if (targets > 1) {
      std::vector<double> values;
      for (const RunOutput& run : runs) {
        double sum = 0.0;
        for (double v : run.metrics[m]) sum += v;
        values.push_back(sum / static_cast<double>(targets));
      }
      result.records.push_back(MakeRecord(config.name, setting,
                                          config.methods[m], "mean",
                                          config.metric, std::move(values)));
    }
  }

  for (std::size_t j = 0; j < targets; ++j) {
    PredictionTrace trace;
    trace.dataset = config.name;
    trace.setting = setting;
    trace.domain = data.targets[j].domain_index;
    const DomainDataset& target = data.targets[j];
    for (std::size_t i = 0; i < target.size(); ++i) {
      trace.truth.push_back(target.targets[i * target.output_dim]);
    }
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      trace.predictions[config.methods[m]] = runs.front().first_column[m][j];
    }
    result.traces.push_back(std::move(trace));
  }
  return result;
}

ExperimentResult RunAblation(const ExperimentConfig& config,
                             const std::string& axis) {
  const KeyValueFile& file = config.source;
  const std::string key = "ablation." + axis;
  ExperimentResult result;

  if (axis == "prompt_components") {
    std::vector<std::string> cells = file.Has(key)
                                         ? file.GetList(key)
                                         : std::vector<std::string>{
                                               "both", "pt_only", "pg_only"};
    ExperimentConfig c = config;
    c.methods = {"vanilla"};
    std::vector<std::string> names{"none"};
    for (const std::string& cell : cells) {
      PromptComponents p = PromptComponents::Parse(cell);
      c.methods.push_back(p.general && p.temporal ? "ours"
                          : p.temporal            ? "ours_no_PG"
                                                  : "ours_no_PT");
      names.push_back(p.Name());
    }
    ExperimentResult cell_result = RunExperiment(c, "components");
    for (MetricRecord& r : cell_result.records) {
      const auto it = std::find(c.methods.begin(), c.methods.end(), r.method);
      r.setting = "components=" + names[it - c.methods.begin()];
    }
    return cell_result;
  }

  auto cells_or = [&](std::vector<long> defaults) {
    std::vector<long> cells = file.GetIntList(key, std::move(defaults));
    for (long v : cells) {
      if (v <= 0) throw ConfigError(key + " values must be positive");
    }
    return cells;
  };

  if (axis == "num_domains") {
    if (config.data.source != "synthetic") {
      throw ConfigError("the num_domains axis needs synthetic data");
    }
    for (long tau : cells_or({4, 19, 49})) {
      ExperimentConfig c = config;
      c.data.synthetic.num_domains = static_cast<std::size_t>(tau) + 1;
      c.data.num_sources = static_cast<std::size_t>(tau);
      result.Append(RunExperiment(c, "sources=" + std::to_string(tau)));
    }
  } else if (axis == "prompt_size") {
    for (long n : cells_or({16, 32, 64})) {
      ExperimentConfig c = config;
      c.backbone.embed_dim = static_cast<std::size_t>(n);
      result.Append(RunExperiment(c, "n=" + std::to_string(n)));
    }
  } else if (axis == "generator_layers") {
    for (long layers : cells_or({1, 2, 3})) {
      ExperimentConfig c = config;
      c.generator.num_layers = static_cast<std::size_t>(layers);
      result.Append(RunExperiment(c, "layers=" + std::to_string(layers)));
    }
  } else {
    throw ConfigError("unknown ablation axis '" + axis + "'");
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {

std::string Num(double v, int digits = 10) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, v);
  return buffer;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string SafeName(std::string s) {
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) c = '_';
  }
  return s;
}

}  // namespace

std::string RecordsCsv(const std::vector<MetricRecord>& records) {
  std::ostringstream out;
  out << "dataset,setting,method,domain,metric,mean,std,runs,values\n";
  for (const MetricRecord& r : records) {
    std::string values;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      if (i) values += ';';
      values += Num(r.values[i]);
    }
    out << CsvField(r.dataset) << ',' << CsvField(r.setting) << ','
        << CsvField(r.method) << ',' << CsvField(r.domain) << ','
        << MetricKindName(r.kind) << ',' << Num(r.mean) << ','
        << (r.runs > 1 ? Num(r.std) : "") << ',' << r.runs << ',' << values
        << '\n';
  }
  return out.str();
}

std::string RecordsTable(const std::vector<MetricRecord>& records) {
  std::vector<std::vector<std::string>> rows{
      {"dataset", "setting", "method", "domain", "metric", "mean", "std",
       "runs"}};
  for (const MetricRecord& r : records) {
    rows.push_back({r.dataset, r.setting.empty() ? "-" : r.setting, r.method,
                    r.domain, MetricKindName(r.kind), Num(r.mean, 6),
                    r.runs > 1 ? Num(r.std, 6) : "-", std::to_string(r.runs)});
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string line;
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      std::string cell = rows[i][c];
      cell.resize(width[c], ' ');
      line += cell;
      if (c + 1 < rows[i].size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

std::string TraceSvg(const PredictionTrace& trace) {
  constexpr double kWidth = 720, kHeight = 300, kLeft = 50, kRight = 130,
                   kTop = 30, kBottom = 30;
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b"};
  std::vector<std::pair<std::string, const std::vector<double>*>> series{
      {"truth", &trace.truth}};
  for (const auto& [method, values] : trace.predictions) {
    series.emplace_back(method, &values);
  }
  // Vanilla first, then the rest alphabetically (map order).
  std::stable_sort(series.begin() + 1, series.end(),
                   [](const auto& a, const auto& b) {
                     return (a.first == "vanilla") > (b.first == "vanilla");
                   });
  double lo = 0.0, hi = 1.0;
  bool first = true;
  std::size_t points = 0;
  for (const auto& [name, values] : series) {
    points = std::max(points, values->size());
    for (double v : *values) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto x_at = [&](std::size_t i) {
    return kLeft + (points > 1 ? plot_w * static_cast<double>(i) /
                                     static_cast<double>(points - 1)
                               : plot_w / 2);
  };
  auto y_at = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };
  char buf[128];

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<metadata>\nexample";
  for (const auto& [name, values] : series) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < points; ++i) {
    out << i;
    for (const auto& [name, values] : series) {
      out << ',' << (i < values->size() ? Num((*values)[i]) : "");
    }
    out << '\n';
  }
  out << "</metadata>\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  std::string title = trace.dataset;
  if (!trace.setting.empty()) title += " [" + trace.setting + "]";
  title += " target domain " + std::to_string(trace.domain);
  out << "<text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" "
      << "font-size=\"13\">" << title << "</text>\n";
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                "fill=\"none\" stroke=\"#888\"/>\n",
                kLeft, kTop, plot_w, plot_h);
  out << buf;
  for (double v : {lo, hi}) {
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" "
                  "font-size=\"10\" text-anchor=\"end\">%s</text>\n",
                  kLeft - 4, y_at(v) + 3, Num(v, 4).c_str());
    out << buf;
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& [name, values] = series[s];
    const std::string color =
        s == 0 ? "#000000" : kPalette[(s - 1) % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"" << (s == 0 ? "2" : "1.3") << "\" points=\"";
    for (std::size_t i = 0; i < values->size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", i ? " " : "", x_at(i),
                    y_at((*values)[i]));
      out << buf;
    }
    out << "\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(s) + 6;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"%s\" stroke-width=\"2\"/>\n",
                  kWidth - kRight + 10, ly, kWidth - kRight + 30, ly,
                  color.c_str());
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" "
                  "font-size=\"11\">",
                  kWidth - kRight + 35, ly + 4);
    out << buf << name << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void EmitReport(const ExperimentResult& result,
                const std::filesystem::path& out_dir) {
  if (result.records.empty()) throw StateError("EmitReport: no records");
  try {
    std::filesystem::create_directories(out_dir / "plots");
  } catch (const std::filesystem::filesystem_error& e) {
    throw DataError("cannot create report directory: " + std::string(e.what()));
  }
  WriteFile(out_dir / "records.csv", RecordsCsv(result.records));

  std::ostringstream params;
  params << "setting,backbone,generator,general_prompt,domain_prompts,added,"
            "added_over_backbone\n";
  for (const ParameterCounts& p : result.parameters) {
    params << CsvField(p.setting) << ',' << p.backbone << ',' << p.generator
           << ',' << p.general_prompt << ',' << p.domain_prompts << ','
           << p.added() << ','
           << Num(static_cast<double>(p.added()) /
                      static_cast<double>(std::max<std::size_t>(p.backbone, 1)),
                  6)
           << '\n';
  }
  WriteFile(out_dir / "parameters.csv", params.str());

  std::string text = RecordsTable(result.records);
  text += "\nparameters\n";
  for (const ParameterCounts& p : result.parameters) {
    text += "  " + (p.setting.empty() ? std::string("-") : p.setting) +
            ": backbone " + std::to_string(p.backbone) + ", added " +
            std::to_string(p.added()) + " (generator " +
            std::to_string(p.generator) + ", general " +
            std::to_string(p.general_prompt) + ", domain prompts " +
            std::to_string(p.domain_prompts) + ")\n";
  }
  WriteFile(out_dir / "report.txt", text);

  for (const PredictionTrace& trace : result.traces) {
    std::string name = SafeName(trace.dataset);
    if (!trace.setting.empty()) name += "_" + SafeName(trace.setting);
    name += "_domain" + std::to_string(trace.domain) + ".svg";
    WriteFile(out_dir / "plots" / name, TraceSvg(trace));
  }
}

}  // namespace tempo
