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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "tempo/errors.h"
#include "tempo/experiment.h"

namespace tempo {
namespace {

TEST(ComputeMetricTest, PerfectPrediction) {
  const std::vector<double> y{0.5, -1.0, 2.0};
  EXPECT_EQ(ComputeMetric(y, y, MetricKind::kMse), 0.0);
  EXPECT_EQ(ComputeMetric(y, y, MetricKind::kMae), 0.0);
  const std::vector<double> logits{3.0, -2.0};
  const std::vector<double> labels{1.0, 0.0};
  EXPECT_EQ(ComputeMetric(logits, labels, MetricKind::kClassificationErrorPct),
            0.0);
}

TEST(ComputeMetricTest, OneWrongOfFourIs25Percent) {
  const std::vector<double> logits{1.0, -1.0, 0.5, 2.0};
  const std::vector<double> labels{1.0, 0.0, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(
      ComputeMetric(logits, labels, MetricKind::kClassificationErrorPct), 25.0);
}

TEST(ComputeMetricTest, ZeroLogitPredictsClassZero) {
  const std::vector<double> logits{0.0};
  const std::vector<double> one{1.0};
  EXPECT_EQ(ComputeMetric(logits, one, MetricKind::kClassificationErrorPct),
            100.0);
}

TEST(ComputeMetricTest, MseAndMae) {
  const std::vector<double> p{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> y{1.5, 2.0, 1.0, 4.0};
  EXPECT_DOUBLE_EQ(ComputeMetric(p, y, MetricKind::kMse), (0.25 + 4.0) / 4.0);
  EXPECT_DOUBLE_EQ(ComputeMetric(p, y, MetricKind::kMae), 2.5 / 4.0);
}

TEST(ComputeMetricTest, RmseTimesThousand) {
  // Constant error e gives MSE e^2.
  const double e = std::sqrt(1.19e-5);
  const std::vector<double> p{e, -e};
  const std::vector<double> y{0.0, 0.0};
  EXPECT_NEAR(ComputeMetric(p, y, MetricKind::kRmseX1e3), 3.45, 5e-3);
  EXPECT_NEAR(ComputeMetric(p, y, MetricKind::kRmseX1e3),
              std::sqrt(ComputeMetric(p, y, MetricKind::kMse)) * 1000.0,
              1e-12);
}

TEST(ComputeMetricTest, Errors) {
  const std::vector<double> two{1.0, 2.0};
  const std::vector<double> one{1.0};
  const std::vector<double> none;
  EXPECT_THROW(ComputeMetric(two, one, MetricKind::kMse), DataError);
  EXPECT_THROW(ComputeMetric(none, none, MetricKind::kMae), DataError);
}

TEST(MetricKindTest, NamesRoundTrip) {
  for (MetricKind k : {MetricKind::kMse, MetricKind::kMae,
                       MetricKind::kClassificationErrorPct,
                       MetricKind::kRmseX1e3}) {
    EXPECT_EQ(ParseMetricKind(MetricKindName(k)), k);
  }
  EXPECT_THROW(ParseMetricKind("accuracy"), ConfigError);
}

TEST(AggregateTest, MatchesTwoPassOracle) {
  const std::vector<double> v{0.1, 0.4, 0.25, 0.7, 0.05};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= 5.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const Summary s = Aggregate(v);
  EXPECT_DOUBLE_EQ(s.mean, mean);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(ss / 4.0));
  EXPECT_EQ(s.count, 5u);
}

TEST(AggregateTest, SingleValueHasNoSpread) {
  const std::vector<double> v{3.0};
  const Summary s = Aggregate(v);
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.std, 0.0);
}

MetricRecord SampleRecord(std::vector<double> values) {
  return MakeRecord("cos", "", "ours", "20", MetricKind::kMse,
                    std::move(values));
}

TEST(RecordsCsvTest, OneRecordIsOneRowWithHeader) {
  const std::string csv = RecordsCsv({SampleRecord({0.5})});
  EXPECT_EQ(csv,
            "dataset,setting,method,domain,metric,mean,std,runs,values\n"
            "cos,,ours,20,mse,0.5,,1,0.5\n");
}

TEST(RecordsCsvTest, StdOnlyWithSeveralRuns) {
  const std::string csv = RecordsCsv({SampleRecord({1.0, 3.0})});
  EXPECT_NE(csv.find("cos,,ours,20,mse,2,1.414213562,2,1;3\n"),
            std::string::npos)
      << csv;
}

TEST(RecordsTableTest, AlignsColumns) {
  const std::string table =
      RecordsTable({SampleRecord({1.0, 3.0}), SampleRecord({0.25})});
  std::istringstream in(table);
  std::string header, rule, row;
  std::getline(in, header);
  std::getline(in, rule);
  std::getline(in, row);
  EXPECT_EQ(header.find("method"), row.find("ours"));
  EXPECT_EQ(rule.find_first_not_of('-'), std::string::npos);
}

PredictionTrace SampleTrace() {
  PredictionTrace t;
  t.dataset = "cos";
  t.domain = 20;
  t.truth = {0.0, 1.0, 0.5};
  t.predictions["vanilla"] = {0.1, 0.8, 0.4};
  t.predictions["ours"] = {0.0, 0.9, 0.5};
  return t;
}

TEST(TraceSvgTest, HasTruthAndPredictionTraces) {
  const std::string svg = TraceSvg(SampleTrace());
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  std::size_t polylines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos;
       p = svg.find("<polyline", p + 1)) {
    ++polylines;
  }
  EXPECT_EQ(polylines, 3u);
  EXPECT_NE(svg.find(">truth</text>"), std::string::npos);
  EXPECT_NE(svg.find(">ours</text>"), std::string::npos);
  EXPECT_NE(svg.find("example,truth,vanilla,ours\n0,0,0.1,0\n"),
            std::string::npos);
}

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

TEST(EmitReportTest, WritesFilesAndIsByteStable) {
  ExperimentResult result;
  result.records = {SampleRecord({0.1, 0.2, 0.3})};
  result.traces = {SampleTrace()};
  ParameterCounts counts;
  counts.backbone = 1000;
  counts.generator = 100;
  counts.general_prompt = 8;
  counts.domain_prompts = 152;
  result.parameters = {counts};
  const auto dir = std::filesystem::path(::testing::TempDir()) / "tempo_report";
  std::filesystem::remove_all(dir);
  EmitReport(result, dir);
  const std::string csv = Slurp(dir / "records.csv");
  const std::string svg = Slurp(dir / "plots" / "cos_domain20.svg");
  EXPECT_FALSE(csv.empty());
  EXPECT_FALSE(svg.empty());
  EXPECT_NE(Slurp(dir / "parameters.csv").find(",1000,100,8,152,260,0.26\n"),
            std::string::npos);
  EXPECT_NE(Slurp(dir / "report.txt").find("ours"), std::string::npos);
  EmitReport(result, dir);
  EXPECT_EQ(Slurp(dir / "records.csv"), csv);
  EXPECT_EQ(Slurp(dir / "plots" / "cos_domain20.svg"), svg);
}

TEST(EmitReportTest, Errors) {
  EXPECT_THROW(EmitReport({}, ::testing::TempDir()), StateError);
  ExperimentResult result;
  result.records = {SampleRecord({0.1})};
  const auto file = std::filesystem::path(::testing::TempDir()) / "tempo_file";
  std::ofstream(file) << "x";
  EXPECT_THROW(EmitReport(result, file / "sub"), DataError);
}

}  // namespace
}  // namespace tempo
