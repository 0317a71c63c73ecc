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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tempo/errors.h"

namespace tempo {
namespace {

namespace fs = std::filesystem;

SeriesDomain Ramp(std::size_t length) {
  SeriesDomain s;
  s.domain_index = 3;
  for (std::size_t t = 0; t < length; ++t) {
    s.values.push_back(static_cast<double>(t));
  }
  return s;
}

TEST(WindowSeriesTest, Length100Window20Horizon15Gives66) {
  WindowOptions w;
  w.window = 20;
  w.horizon = 15;
  EXPECT_EQ(WindowCount(100, w), 66u);
  const DomainDataset d = WindowSeries(Ramp(100), w);
  EXPECT_EQ(d.size(), 66u);
  EXPECT_EQ(d.output_dim, 15u);
  EXPECT_EQ(d.domain_index, 3);
  // Last example: inputs 65..84, targets 85..99.
  EXPECT_EQ(d.inputs[65 * 20], 65.0);
  EXPECT_EQ(d.targets[65 * 15 + 14], 99.0);
}

TEST(WindowSeriesTest, StrideSkipsStarts) {
  WindowOptions w;
  w.window = 4;
  w.stride = 3;
  const DomainDataset d = WindowSeries(Ramp(12), w);
  // Starts 0, 3, 6 (start 9 would need value 13).
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.inputs[4], 3.0);
  EXPECT_EQ(d.targets[2], 10.0);
}

TEST(WindowSeriesTest, TooShortThrows) {
  WindowOptions w;
  w.window = 20;
  w.horizon = 15;
  EXPECT_THROW(WindowSeries(Ramp(34), w), DataError);
  w.window = 0;
  EXPECT_THROW(WindowSeries(Ramp(100), w), ConfigError);
}

TEST(WindowSeriesTest, VariableLengthIsSeededAndFrontPadded) {
  WindowOptions w;
  w.window = 10;
  w.fixed_length = false;
  w.seed = 42;
  const DomainDataset a = WindowSeries(Ramp(200), w);
  const DomainDataset b = WindowSeries(Ramp(200), w);
  ASSERT_EQ(a.lengths.size(), a.size());
  EXPECT_EQ(a.lengths, b.lengths);
  std::set<std::size_t> seen;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const std::size_t valid = a.lengths[e];
    EXPECT_GE(valid, 5u);
    EXPECT_LE(valid, 10u);
    seen.insert(valid);
    for (std::size_t s = 0; s < 10; ++s) {
      const double expected = s < 10 - valid ? 0.0 : static_cast<double>(e + s);
      ASSERT_EQ(a.inputs[e * 10 + s], expected);
    }
  }
  EXPECT_GT(seen.size(), 3u);
  w.seed = 43;
  EXPECT_NE(WindowSeries(Ramp(200), w).lengths, a.lengths);
}

TEST(SplitHeadTest, TenRowsNinetyPercent) {
  const DomainDataset d = WindowSeries(Ramp(11), WindowOptions{1, 1, 1});
  ASSERT_EQ(d.size(), 10u);
  auto [train, test] = SplitHead(d, 0.9);
  EXPECT_EQ(train.size(), 9u);
  EXPECT_EQ(test.size(), 1u);
  EXPECT_EQ(train.split, Split::kTrain);
  EXPECT_EQ(test.split, Split::kInDomainTest);
  // Row-disjoint: the test row is the last example.
  EXPECT_EQ(test.inputs[0], 9.0);
  for (double v : train.inputs) EXPECT_LT(v, 9.0);
  EXPECT_THROW(SplitHead(d, 0.0), ConfigError);
  EXPECT_THROW(SplitHead(d, 1.5), ConfigError);
}

TEST(DomainDatasetTest, ValidateRejectsNonFinite) {
  DomainDataset d = WindowSeries(Ramp(30), WindowOptions{});
  d.Validate();
  d.inputs[3] = std::nan("");
  EXPECT_THROW(d.Validate(), DataError);
}

// ---------------------------------------------------------------------------

class PartitionedTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  fs::path Write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name, std::ios::binary) << text;
    return dir_ / name;
  }

  // Three months, ten rows each; the label is 1 when f1 > 0.
  std::string MonthlyCsv() const {
    std::string csv = "date,f1,f2,label\n";
    for (int m = 1; m <= 3; ++m) {
      for (int r = 0; r < 10; ++r) {
        const double f1 = (r % 2 ? 1.0 : -1.0) * (r + m);
        csv += "2019-0" + std::to_string(m) + "-" + std::to_string(10 + r) +
               "," + std::to_string(f1) + "," + std::to_string(r * 0.5) + "," +
               (f1 > 0 ? "1" : "0") + "\n";
      }
    }
    return csv;
  }

  DatasetManifest MonthlyManifest() {
    DatasetManifest m;
    m.files = {Write("data.csv", MonthlyCsv())};
    m.domain_column = "date";
    m.bucket = "month";
    m.target_columns = {"label"};
    m.task = TaskKind::kBinaryClassification;
    return m;
  }

  fs::path dir_;
};

TEST_F(PartitionedTest, MonthlyBucketsBecomeDomains) {
  const DomainSequence seq = LoadPartitioned(MonthlyManifest());
  ASSERT_EQ(seq.num_sources(), 2u);
  ASSERT_EQ(seq.targets.size(), 1u);
  EXPECT_EQ(seq.source_train[0].domain_index, 1);
  EXPECT_EQ(seq.source_train[1].domain_index, 2);
  EXPECT_EQ(seq.targets[0].domain_index, 3);
  EXPECT_EQ(seq.source_train[0].size(), 9u);
  EXPECT_EQ(seq.source_test[0].size(), 1u);
  EXPECT_EQ(seq.targets[0].size(), 10u);
  EXPECT_EQ(seq.source_train[0].input_dim, 2u);
  EXPECT_EQ(seq.targets[0].split, Split::kTargetTest);
}

TEST_F(PartitionedTest, StandardizesOnSourceTrainOnly) {
  const DomainSequence seq = LoadPartitioned(MonthlyManifest());
  for (std::size_t j = 0; j < 2; ++j) {
    double sum = 0.0, sum_sq = 0.0, n = 0.0;
    for (const DomainDataset& d : seq.source_train) {
      for (std::size_t e = 0; e < d.size(); ++e) {
        const double v = d.inputs[e * 2 + j];
        sum += v;
        sum_sq += v * v;
        n += 1.0;
      }
    }
    EXPECT_NEAR(sum / n, 0.0, 1e-12);
    EXPECT_NEAR(sum_sq / n, 1.0, 1e-12);
  }
}

TEST_F(PartitionedTest, ReloadIsIdentical) {
  const DatasetManifest m = MonthlyManifest();
  const DomainSequence a = LoadPartitioned(m);
  const DomainSequence b = LoadPartitioned(m);
  EXPECT_EQ(a.targets[0].inputs, b.targets[0].inputs);
  EXPECT_EQ(a.source_train[1].targets, b.source_train[1].targets);
}

TEST_F(PartitionedTest, NanNamesTheRow) {
  DatasetManifest m = MonthlyManifest();
  std::string csv = MonthlyCsv();
  const std::size_t third_line = csv.find('\n', csv.find('\n') + 1) + 1;
  const std::size_t comma = csv.find(',', third_line);
  csv.replace(comma + 1, csv.find(',', comma + 1) - comma - 1, "nan");
  m.files = {Write("nan.csv", csv)};
  try {
    LoadPartitioned(m);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos)
        << e.what();
    EXPECT_NE(std::string(e.what()).find("f1"), std::string::npos);
  }
}

TEST_F(PartitionedTest, MissingColumnThrows) {
  DatasetManifest m = MonthlyManifest();
  m.target_columns = {"price"};
  EXPECT_THROW(LoadPartitioned(m), DataError);
}

TEST_F(PartitionedTest, NumericBucketsSortNumerically) {
  DatasetManifest m;
  m.files = {Write("num.csv",
                   "t,x,y\n10,1,2\n9,1,2\n9,2,3\n10,3,4\n2,5,6\n2,6,7\n")};
  m.domain_column = "t";
  m.target_columns = {"y"};
  m.train_fraction = 0.5;
  m.standardize = false;
  const DomainSequence seq = LoadPartitioned(m);
  ASSERT_EQ(seq.num_sources(), 2u);
  EXPECT_EQ(seq.source_train[0].inputs[0], 5.0);  // t = 2
  EXPECT_EQ(seq.source_train[1].inputs[0], 1.0);  // t = 9
  EXPECT_EQ(seq.targets[0].inputs[0], 1.0);       // t = 10
}

TEST_F(PartitionedTest, ManifestFileResolvesRelativePaths) {
  Write("data.csv", MonthlyCsv());
  const fs::path ini = Write(
      "manifest.ini",
      "[dataset]\nfiles = data.csv\ndomain_column = date\nbucket = month\n"
      "target_columns = label\ntask = binary_classification\n"
      "num_source_domains = 1\n");
  const DatasetManifest m = DatasetManifest::FromFile(ini);
  ASSERT_EQ(m.files.size(), 1u);
  EXPECT_EQ(m.files[0], dir_ / "data.csv");
  const DomainSequence seq = LoadPartitioned(m);
  EXPECT_EQ(seq.num_sources(), 1u);
  EXPECT_EQ(seq.targets.size(), 2u);
}

TEST_F(PartitionedTest, ForecastingWindowsEachDomain) {
  std::string csv = "d,x\n";
  for (int d = 1; d <= 2; ++d) {
    for (int t = 0; t < 40; ++t) {
      csv += std::to_string(d) + "," + std::to_string(t + 100 * d) + "\n";
    }
  }
  DatasetManifest m;
  m.files = {Write("series.csv", csv)};
  m.domain_column = "d";
  m.target_columns = {"x"};
  m.task = TaskKind::kForecasting;
  m.standardize = false;
  m.windows.window = 5;
  m.windows.horizon = 2;
  const DomainSequence seq = LoadPartitioned(m);
  EXPECT_EQ(seq.source_train[0].size() + seq.source_test[0].size(), 34u);
  EXPECT_EQ(seq.targets[0].inputs[0], 200.0);
  EXPECT_EQ(seq.targets[0].targets[1], 206.0);
}

}  // namespace
}  // namespace tempo
