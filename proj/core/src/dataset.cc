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

#include "tempo/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <boost/algorithm/string.hpp>

#include "tempo/config.h"
#include "tempo/errors.h"

namespace tempo {

const char* SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kInDomainTest: return "in_domain_test";
    case Split::kValidation: return "validation";
    case Split::kTargetTest: return "target_test";
  }
  return "unknown";
}

const char* TaskKindName(TaskKind kind) {
  switch (kind) {
    case TaskKind::kRegression: return "regression";
    case TaskKind::kBinaryClassification: return "binary_classification";
    case TaskKind::kForecasting: return "forecasting";
  }
  return "unknown";
}

TaskKind ParseTaskKind(const std::string& name) {
  if (name == "regression") return TaskKind::kRegression;
  if (name == "binary_classification" || name == "classification") {
    return TaskKind::kBinaryClassification;
  }
  if (name == "forecasting") return TaskKind::kForecasting;
  throw ConfigError("unknown task kind '" + name + "'");
}

// ---------------------------------------------------------------------------

std::size_t DomainDataset::size() const {
  return output_dim == 0 ? 0 : targets.size() / output_dim;
}

void DomainDataset::Validate() const {
  const std::size_t n = size();
  if (input_dim == 0 || output_dim == 0 || window == 0) {
    throw DataError("domain " + std::to_string(domain_index) +
                    ": dimensions must be positive");
  }
  if (inputs.size() != n * example_stride() || targets.size() != n * output_dim) {
    throw DataError("domain " + std::to_string(domain_index) +
                    ": input and target row counts differ");
  }
  if (!lengths.empty() && lengths.size() != n) {
    throw DataError("domain " + std::to_string(domain_index) +
                    ": length vector does not match example count");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!std::isfinite(inputs[i])) {
      throw DataError("domain " + std::to_string(domain_index) +
                      ": non-finite input in example " +
                      std::to_string(i / example_stride()));
    }
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!std::isfinite(targets[i])) {
      throw DataError("domain " + std::to_string(domain_index) +
                      ": non-finite target in example " +
                      std::to_string(i / output_dim));
    }
  }
}

DomainDataset DomainDataset::Subset(std::span<const std::size_t> rows) const {
  DomainDataset out = *this;
  out.inputs.clear();
  out.targets.clear();
  out.lengths.clear();
  const std::size_t stride = example_stride();
  for (std::size_t r : rows) {
    if (r >= size()) throw DataError("Subset: row out of range");
    out.inputs.insert(out.inputs.end(), inputs.begin() + r * stride,
                      inputs.begin() + (r + 1) * stride);
    out.targets.insert(out.targets.end(), targets.begin() + r * output_dim,
                       targets.begin() + (r + 1) * output_dim);
    if (!lengths.empty()) out.lengths.push_back(lengths[r]);
  }
  return out;
}

Batch MakeBatch(const DomainDataset& data, std::span<const std::size_t> rows) {
  DomainDataset subset = data.Subset(rows);
  const std::size_t b = rows.size();
  Batch batch;
  if (data.layout == InputLayout::kTabular) {
    batch.inputs =
        Tensor::FromData({b, data.input_dim}, std::move(subset.inputs));
  } else {
    batch.inputs = Tensor::FromData({b, data.window, data.input_dim},
                                    std::move(subset.inputs));
  }
  batch.targets =
      Tensor::FromData({b, data.output_dim}, std::move(subset.targets));
  batch.lengths = std::move(subset.lengths);
  return batch;
}

Batch FullBatch(const DomainDataset& data) {
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return MakeBatch(data, rows);
}

std::pair<DomainDataset, DomainDataset> SplitHead(const DomainDataset& data,
                                                  double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1]");
  }
  const std::size_t n = data.size();
  const auto cut = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * train_fraction + 1e-9));
  std::vector<std::size_t> head(cut), tail(n - cut);
  for (std::size_t i = 0; i < cut; ++i) head[i] = i;
  for (std::size_t i = cut; i < n; ++i) tail[i - cut] = i;
  DomainDataset train = data.Subset(head);
  DomainDataset test = data.Subset(tail);
  train.split = Split::kTrain;
  test.split = Split::kInDomainTest;
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------

std::size_t WindowCount(std::size_t length, const WindowOptions& options) {
  if (options.window + options.horizon > length) return 0;
  return (length - options.window - options.horizon) / options.stride + 1;
}

DomainDataset WindowSeries(const SeriesDomain& series,
                           const WindowOptions& options) {
  if (options.window == 0 || options.horizon == 0 || options.stride == 0) {
    throw ConfigError("window, horizon and stride must be at least 1");
  }
  if (series.num_features == 0 || series.values.size() % series.num_features) {
    throw DataError("series values do not divide into features");
  }
  const std::size_t length = series.length();
  if (!series.target_values.empty() && series.target_values.size() != length) {
    throw DataError("series targets do not match series length");
  }
  if (options.window + options.horizon > length) {
    throw DataError("domain " + std::to_string(series.domain_index) +
                    ": series of length " + std::to_string(length) +
                    " is too short for window " +
                    std::to_string(options.window) + " + horizon " +
                    std::to_string(options.horizon));
  }
  const std::size_t count = WindowCount(length, options);
  const std::size_t f = series.num_features;

  DomainDataset out;
  out.domain_index = series.domain_index;
  out.layout = InputLayout::kSequence;
  out.input_dim = f;
  out.window = options.window;
  out.output_dim = options.horizon;
  out.inputs.reserve(count * options.window * f);
  out.targets.reserve(count * options.horizon);

  std::mt19937_64 length_rng(options.seed);
  std::uniform_int_distribution<std::size_t> length_dist(
      (options.window + 1) / 2, options.window);
  for (std::size_t e = 0; e < count; ++e) {
    const std::size_t start = e * options.stride;
    const std::size_t valid =
        options.fixed_length ? options.window : length_dist(length_rng);
    const std::size_t pad = options.window - valid;
    for (std::size_t s = 0; s < options.window; ++s) {
      for (std::size_t j = 0; j < f; ++j) {
        out.inputs.push_back(s < pad ? 0.0
                                     : series.values[(start + s) * f + j]);
      }
    }
    for (std::size_t h = 0; h < options.horizon; ++h) {
      out.targets.push_back(series.target_at(start + options.window + h));
    }
    if (!options.fixed_length) out.lengths.push_back(valid);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV.

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(boost::algorithm::trim_copy(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(boost::algorithm::trim_copy(current));
  return fields;
}

bool ParseDouble(const std::string& text, double& value) {
  if (text.empty()) return false;
  try {
    std::size_t used = 0;
    value = std::stod(text, &used);
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::size_t CsvTable::ColumnIndex(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable ReadCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read CSV file " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (boost::algorithm::trim_copy(line).empty()) continue;
    if (table.header.empty()) {
      if (line_number == 1 && line.size() >= 3 &&
          line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
      }
      table.header = SplitCsvLine(line);
      continue;
    }
    auto fields = SplitCsvLine(line);
    if (fields.size() != table.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_number) +
                      ": expected " + std::to_string(table.header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_number);
  }
  if (table.header.empty()) throw DataError("CSV file has no header: " + path.string());
  return table;
}

DatasetManifest DatasetManifest::FromFile(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw DataError("dataset manifest not found: " + path.string());
  }
  KeyValueFile file = KeyValueFile::Read(path);
  DatasetManifest m;
  for (const std::string& f : file.GetList("dataset.files")) {
    std::filesystem::path p(f);
    m.files.push_back(p.is_absolute() ? p : path.parent_path() / p);
  }
  if (m.files.empty()) throw ConfigError("manifest lists no files");
  m.domain_column = file.GetString("dataset.domain_column", "");
  if (m.domain_column.empty()) throw ConfigError("manifest needs domain_column");
  m.bucket = file.GetString("dataset.bucket", "value");
  if (m.bucket != "value" && m.bucket != "month") {
    throw ConfigError("bucket must be 'value' or 'month'");
  }
  m.target_columns = file.GetList("dataset.target_columns");
  if (m.target_columns.empty()) throw ConfigError("manifest needs target_columns");
  m.feature_columns = file.GetList("dataset.feature_columns");
  m.task = ParseTaskKind(file.GetString("dataset.task", "regression"));
  m.train_fraction = file.GetDouble("dataset.train_fraction", 0.9);
  m.num_source_domains =
      static_cast<std::size_t>(file.GetInt("dataset.num_source_domains", 0));
  m.standardize = file.GetBool("dataset.standardize", true);
  m.windows.window = static_cast<std::size_t>(file.GetInt("dataset.window", 20));
  m.windows.horizon = static_cast<std::size_t>(file.GetInt("dataset.horizon", 1));
  m.windows.stride = static_cast<std::size_t>(file.GetInt("dataset.stride", 1));
  m.windows.fixed_length = file.GetBool("dataset.fixed_length", true);
  m.windows.seed = static_cast<std::uint64_t>(file.GetInt("dataset.window_seed", 0));
  return m;
}

namespace {

// Per-feature standardization fitted on source training inputs only.
void Standardize(DomainSequence& seq) {
  if (seq.source_train.empty()) return;
  const std::size_t f = seq.source_train.front().input_dim;
  std::vector<double> sum(f, 0.0), sum_sq(f, 0.0);
  double count = 0.0;
  auto for_each_valid_step = [f](const DomainDataset& d, auto&& fn) {
    for (std::size_t e = 0; e < d.size(); ++e) {
      const std::size_t pad = d.lengths.empty() ? 0 : d.window - d.lengths[e];
      for (std::size_t s = pad; s < d.window; ++s) {
        fn(d.example_stride() * e + s * f);
      }
    }
  };
  for (const DomainDataset& d : seq.source_train) {
    for_each_valid_step(d, [&](std::size_t base) {
      for (std::size_t j = 0; j < f; ++j) {
        sum[j] += d.inputs[base + j];
        sum_sq[j] += d.inputs[base + j] * d.inputs[base + j];
      }
      count += 1.0;
    });
  }
  if (count == 0.0) return;
  std::vector<double> mean(f), scale(f);
  for (std::size_t j = 0; j < f; ++j) {
    mean[j] = sum[j] / count;
    const double var = std::max(sum_sq[j] / count - mean[j] * mean[j], 0.0);
    scale[j] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  auto apply = [&](DomainDataset& d) {
    for_each_valid_step(d, [&](std::size_t base) {
      for (std::size_t j = 0; j < f; ++j) {
        d.inputs[base + j] = (d.inputs[base + j] - mean[j]) * scale[j];
      }
    });
  };
  for (auto& d : seq.source_train) apply(d);
  for (auto& d : seq.source_test) apply(d);
  for (auto& d : seq.targets) apply(d);
}

}  // namespace

DomainSequence LoadPartitioned(const DatasetManifest& manifest) {
  CsvTable table;
  for (const auto& path : manifest.files) {
    CsvTable part = ReadCsv(path);
    if (table.header.empty()) {
      table.header = part.header;
    } else if (part.header != table.header) {
      throw DataError("CSV header of " + path.string() +
                      " differs from the first file");
    }
    for (std::size_t i = 0; i < part.rows.size(); ++i) {
      table.rows.push_back(std::move(part.rows[i]));
      table.line_numbers.push_back(part.line_numbers[i]);
    }
  }
  const std::size_t domain_col = table.ColumnIndex(manifest.domain_column);
  std::vector<std::size_t> target_cols;
  for (const auto& name : manifest.target_columns) {
    target_cols.push_back(table.ColumnIndex(name));
  }
  std::vector<std::size_t> feature_cols;
  if (manifest.feature_columns.empty()) {
    // Forecasting feeds the target's own history back as input.
    const bool keep_targets = manifest.task == TaskKind::kForecasting;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c != domain_col &&
          (keep_targets || std::find(target_cols.begin(), target_cols.end(),
                                     c) == target_cols.end())) {
        feature_cols.push_back(c);
      }
    }
  } else {
    for (const auto& name : manifest.feature_columns) {
      feature_cols.push_back(table.ColumnIndex(name));
    }
  }
  if (feature_cols.empty()) throw DataError("no feature columns");

  // Bucket keys -> contiguous domain indices 1..N in time order.
  std::vector<std::string> keys(table.rows.size());
  bool all_numeric = true;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string key = table.rows[r][domain_col];
    if (manifest.bucket == "month") {
      if (key.size() < 7 || key[4] != '-') {
        throw DataError("row at line " + std::to_string(table.line_numbers[r]) +
                        ": cannot bucket '" + key + "' by month");
      }
      key = key.substr(0, 7);
    }
    double unused;
    all_numeric = all_numeric && ParseDouble(key, unused);
    keys[r] = key;
  }
  std::vector<std::string> unique(keys.begin(), keys.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (all_numeric && manifest.bucket == "value") {
    std::sort(unique.begin(), unique.end(),
              [](const std::string& a, const std::string& b) {
                return std::stod(a) < std::stod(b);
              });
  }
  std::map<std::string, int> index_of;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    index_of[unique[i]] = static_cast<int>(i) + 1;
  }
  const std::size_t num_domains = unique.size();
  if (num_domains < 2) throw DataError("need at least two domains");

  auto parse_cell = [&](std::size_t r, std::size_t c) {
    double v = 0.0;
    if (!ParseDouble(table.rows[r][c], v) || !std::isfinite(v)) {
      throw DataError("row at line " + std::to_string(table.line_numbers[r]) +
                      ": column '" + table.header[c] +
                      "' has non-finite or non-numeric value '" +
                      table.rows[r][c] + "'");
    }
    return v;
  };

  std::vector<std::vector<std::size_t>> rows_by_domain(num_domains);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    rows_by_domain[index_of[keys[r]] - 1].push_back(r);
  }

  std::vector<DomainDataset> domains(num_domains);
  for (std::size_t d = 0; d < num_domains; ++d) {
    const int index = static_cast<int>(d) + 1;
    if (manifest.task == TaskKind::kForecasting) {
      SeriesDomain series;
      series.domain_index = index;
      series.num_features = feature_cols.size();
      for (std::size_t r : rows_by_domain[d]) {
        for (std::size_t c : feature_cols) series.values.push_back(parse_cell(r, c));
        series.target_values.push_back(parse_cell(r, target_cols.front()));
      }
      WindowOptions w = manifest.windows;
      w.seed = manifest.windows.seed + d;
      domains[d] = WindowSeries(series, w);
    } else {
      DomainDataset& out = domains[d];
      out.domain_index = index;
      out.layout = InputLayout::kTabular;
      out.input_dim = feature_cols.size();
      out.output_dim = target_cols.size();
      for (std::size_t r : rows_by_domain[d]) {
        for (std::size_t c : feature_cols) out.inputs.push_back(parse_cell(r, c));
        for (std::size_t c : target_cols) {
          const double y = parse_cell(r, c);
          if (manifest.task == TaskKind::kBinaryClassification && y != 0.0 &&
              y != 1.0) {
            throw DataError("row at line " +
                            std::to_string(table.line_numbers[r]) +
                            ": binary target must be 0 or 1");
          }
          out.targets.push_back(y);
        }
      }
    }
    domains[d].Validate();
  }

  std::size_t num_sources = manifest.num_source_domains == 0
                                ? num_domains - 1
                                : manifest.num_source_domains;
  if (num_sources >= num_domains) {
    throw ConfigError("num_source_domains must leave at least one target");
  }
  DomainSequence seq;
  seq.task = manifest.task;
  for (std::size_t d = 0; d < num_domains; ++d) {
    if (d < num_sources) {
      auto [train, test] = SplitHead(domains[d], manifest.train_fraction);
      if (train.size() == 0) {
        throw DataError("domain " + std::to_string(d + 1) +
                        " has no training rows");
      }
      seq.source_train.push_back(std::move(train));
      seq.source_test.push_back(std::move(test));
    } else {
      if (domains[d].size() == 0) {
        throw DataError("domain " + std::to_string(d + 1) + " is empty");
      }
      domains[d].split = Split::kTargetTest;
      seq.targets.push_back(std::move(domains[d]));
    }
  }
  if (manifest.standardize) Standardize(seq);
  return seq;
}

}  // namespace tempo
