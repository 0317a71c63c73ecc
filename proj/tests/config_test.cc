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

#include "tempo/config.h"

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "tempo/errors.h"
#include "tempo/pipeline.h"

namespace tempo {
namespace {

TEST(KeyValueFileTest, TypedGettersAndFallbacks) {
  const KeyValueFile f = KeyValueFile::Parse(
      "# comment\n[a]\nname = hello \nx = 2.5\nn = -3\nflag = yes\n"
      "list = 1, 2 ,3\n; other comment\n");
  EXPECT_EQ(f.GetString("a.name", ""), "hello");
  EXPECT_EQ(f.GetDouble("a.x", 0.0), 2.5);
  EXPECT_EQ(f.GetInt("a.n", 0), -3);
  EXPECT_TRUE(f.GetBool("a.flag", false));
  EXPECT_EQ(f.GetIntList("a.list", {}), (std::vector<long>{1, 2, 3}));
  EXPECT_EQ(f.GetList("a.list"), (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_EQ(f.GetInt("a.missing", 7), 7);
  EXPECT_EQ(f.GetIntList("a.missing", {4}), (std::vector<long>{4}));
  EXPECT_FALSE(f.Has("b.name"));
}

TEST(KeyValueFileTest, BadValuesThrowConfigError) {
  const KeyValueFile f =
      KeyValueFile::Parse("[a]\nx = 2.5abc\nn = 1.5\nflag = maybe\nl = 1,x\n");
  EXPECT_THROW(f.GetDouble("a.x", 0.0), ConfigError);
  EXPECT_THROW(f.GetInt("a.n", 0), ConfigError);
  EXPECT_THROW(f.GetBool("a.flag", false), ConfigError);
  EXPECT_THROW(f.GetIntList("a.l", {}), ConfigError);
  EXPECT_THROW(KeyValueFile::Parse("[a\nx = 1\n"), ConfigError);
  EXPECT_THROW(KeyValueFile::Read("/nonexistent/tempo.ini"), ConfigError);
}

TEST(ExperimentConfigTest, DefaultsMatchDocumentedValues) {
  const ExperimentConfig c = ExperimentConfig::FromKeyValue({});
  EXPECT_EQ(c.runs, 3u);
  EXPECT_EQ(c.prompt_tokens, 1u);
  EXPECT_EQ(c.pretrain.lr, 1e-4);
  EXPECT_EQ(c.prompts.epochs, 100u);
  EXPECT_EQ(c.temporal.epochs, 50u);
  EXPECT_EQ(c.data.synthetic.num_domains, 20u);
  EXPECT_EQ(c.data.synthetic.windows.window, 20u);
  EXPECT_EQ(c.data.synthetic.windows.horizon, 1u);
  EXPECT_EQ(c.data.synthetic.windows.stride, 1u);
  EXPECT_EQ(c.generator.num_layers, 1u);
  EXPECT_TRUE(c.components.general);
  EXPECT_TRUE(c.components.temporal);
  EXPECT_EQ(c.methods, (std::vector<std::string>{"vanilla", "ours"}));
}

TEST(ExperimentConfigTest, ReadsEverySection) {
  const ExperimentConfig c = ExperimentConfig::FromKeyValue(KeyValueFile::Parse(
      "[experiment]\nname = cos\nseed = 9\nruns = 2\ncomponents = pt_only\n"
      "metric = mae\nmethods = vanilla, ours_nonsequential\n"
      "[data]\nfamily = cosine\ndrift = cosine_addition\nnum_domains = 6\n"
      "num_sources = 4\nstride = 5\nhorizon = 3\n"
      "[backbone]\nembed_dim = 16\nnum_heads = 2\n"
      "[generator]\nnum_layers = 2\nmode = non_sequential\n"
      "[pretrain]\nepochs = 7\nlr = 1e-3\nbatch_size = 0\n"
      "[prompts]\nepochs = 8\n[temporal]\nepochs = 9\n"));
  EXPECT_EQ(c.name, "cos");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.runs, 2u);
  EXPECT_FALSE(c.components.general);
  EXPECT_EQ(c.metric, MetricKind::kMae);
  EXPECT_EQ(c.methods[1], "ours_nonsequential");
  EXPECT_EQ(c.data.synthetic.family, SeriesFamily::kCosine);
  EXPECT_EQ(c.data.synthetic.drift, DriftKind::kCosineAddition);
  EXPECT_EQ(c.data.num_sources, 4u);
  EXPECT_EQ(c.data.synthetic.windows.stride, 5u);
  EXPECT_EQ(c.backbone.embed_dim, 16u);
  EXPECT_EQ(c.generator.num_layers, 2u);
  EXPECT_EQ(c.generator.mode, GeneratorMode::kNonSequential);
  EXPECT_EQ(c.pretrain.epochs, 7u);
  EXPECT_EQ(c.pretrain.batch_size, 0u);
  EXPECT_EQ(c.pretrain.lr, 1e-3);
  EXPECT_EQ(c.prompts.epochs, 8u);
  EXPECT_EQ(c.temporal.epochs, 9u);

  const DomainSequence data = LoadData(c);
  EXPECT_EQ(data.num_sources(), 4u);
  EXPECT_EQ(data.targets.size(), 2u);
  EXPECT_EQ(data.targets[0].output_dim, 3u);
}

TEST(ExperimentConfigTest, RejectsInvalidSettings) {
  auto parse = [](const std::string& text) {
    return ExperimentConfig::FromKeyValue(KeyValueFile::Parse(text));
  };
  EXPECT_THROW(parse("[experiment]\nruns = 0\n"), ConfigError);
  EXPECT_THROW(parse("[experiment]\nmethods = vanilla, drain\n"), ConfigError);
  EXPECT_THROW(parse("[experiment]\ncomponents = neither\n"), ConfigError);
  EXPECT_THROW(parse("[experiment]\nmetric = accuracy\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nsource = parquet\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nsource = csv\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nnum_domains = 2\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nnum_sources = 20\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nfamily = lorenz\n"), ConfigError);
  EXPECT_THROW(parse("[data]\ntask = rank\n"), ConfigError);
  EXPECT_THROW(parse("[pretrain]\nlr = 0\n"), ConfigError);
  EXPECT_THROW(parse("[pretrain]\nepochs = -1\n"), ConfigError);
  EXPECT_THROW(parse("[generator]\nmode = parallel\n"), ConfigError);
}

TEST(ExperimentConfigTest, ManifestPathIsRelativeToConfig) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "tempo_cfg";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "exp.ini") << "[data]\nsource = csv\nmanifest = m.ini\n";
  const ExperimentConfig c = ExperimentConfig::FromFile(dir / "exp.ini");
  EXPECT_EQ(c.data.manifest, dir / "m.ini");
}

TEST(PromptComponentsTest, NamesRoundTrip) {
  for (const char* name : {"both", "pg_only", "pt_only"}) {
    EXPECT_EQ(PromptComponents::Parse(name).Name(), name);
  }
}

}  // namespace
}  // namespace tempo
