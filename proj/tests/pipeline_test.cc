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

#include "tempo/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "tempo/errors.h"
#include "tempo/experiment.h"

namespace tempo {
namespace {

namespace fs = std::filesystem;

constexpr const char* kTinyConfig =
    "[experiment]\nseed = 3\nruns = 1\n"
    "[data]\nfamily = mackey_glass\ndrift = mg_sigma_alternation\n"
    "num_domains = 5\nwindow = 8\nstride = 50\n"
    "[backbone]\nembed_dim = 8\nnum_heads = 2\nhidden_dim = 16\n"
    "[generator]\nhidden_dim = 16\n"
    "[pretrain]\nepochs = 2\nlr = 1e-3\nbatch_size = 16\n"
    "[prompts]\nepochs = 2\nlr = 1e-2\nbatch_size = 16\n"
    "[temporal]\nepochs = 2\nlr = 1e-3\nbatch_size = 16\n";

ExperimentConfig TinyConfig() {
  return ExperimentConfig::FromKeyValue(KeyValueFile::Parse(kTinyConfig));
}

std::uint64_t BankChecksum(const PromptBank& bank) {
  ParameterList list;
  for (const auto& [t, p] : bank.domain_prompts) {
    list.emplace_back(std::to_string(t), p.values);
  }
  return ParameterChecksum(list);
}

bool SameValues(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

TEST(PipelineTest, PhasesTouchOnlyTheirOwnParameters) {
  const ExperimentConfig config = TinyConfig();
  const DomainSequence data = LoadData(config);
  ASSERT_EQ(data.num_sources(), 4u);
  auto backbone = RunPhase1Pretrain(config, data, 3);
  ASSERT_TRUE(backbone->frozen());
  const std::uint64_t backbone_sum = backbone->Checksum();

  const PromptBank bank = RunPhase2DomainPrompts(config, *backbone, data, 3);
  EXPECT_EQ(backbone->Checksum(), backbone_sum);
  ASSERT_EQ(bank.domain_prompts.size(), 4u);
  const std::uint64_t bank_sum = BankChecksum(bank);

  for (GeneratorMode mode :
       {GeneratorMode::kSequential, GeneratorMode::kNonSequential}) {
    const TemporalResult result = RunPhase3Temporal(
        config, *backbone, bank, data, 3, PromptComponents{}, mode);
    EXPECT_EQ(backbone->Checksum(), backbone_sum);
    EXPECT_EQ(BankChecksum(bank), bank_sum);
    ASSERT_NE(result.generator, nullptr);
    ASSERT_TRUE(result.general.has_value());
    EXPECT_FALSE(result.log.entries.empty());
  }
}

TEST(PipelineTest, DomainPromptsDoNotDependOnEachOther) {
  // Each prompt is learned from its own domain only, so dropping the last
  // source leaves the others bit-identical.
  const ExperimentConfig config = TinyConfig();
  const DomainSequence data = LoadData(config);
  auto backbone = RunPhase1Pretrain(config, data, 3);
  const PromptBank full = RunPhase2DomainPrompts(config, *backbone, data, 3);
  DomainSequence fewer = data;
  fewer.source_train.pop_back();
  fewer.source_test.pop_back();
  const PromptBank partial = RunPhase2DomainPrompts(config, *backbone, fewer, 3);
  ASSERT_EQ(partial.domain_prompts.size(), 3u);
  for (const auto& [t, p] : partial.domain_prompts) {
    EXPECT_TRUE(SameValues(p.values, full.domain_prompts.at(t).values)) << t;
  }
}

TEST(PipelineTest, Phase3NeedsFrozenBackboneAndComponents) {
  const ExperimentConfig config = TinyConfig();
  const DomainSequence data = LoadData(config);
  Rng rng(0);
  Backbone open(ResolveBackbone(config, data), rng);
  PromptBank bank;
  EXPECT_THROW(RunPhase3Temporal(config, open, bank, data, 0,
                                 PromptComponents{}, GeneratorMode::kSequential),
               StateError);
  open.Freeze();
  EXPECT_THROW(RunPhase3Temporal(config, open, bank, data, 0,
                                 PromptComponents{}, GeneratorMode::kSequential),
               StateError);
}

// Central differences of the scalar f with respect to every entry of x.
std::vector<double> NumericGradient(const std::function<double()>& f, Tensor x,
                                    double h = 1e-6) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double saved = x.data()[i];
    x.mutable_data()[i] = saved + h;
    const double up = f();
    x.mutable_data()[i] = saved - h;
    const double down = f();
    x.mutable_data()[i] = saved;
    out[i] = (up - down) / (2 * h);
  }
  return out;
}

TEST(PipelineTest, EndToEndGradientsMatchFiniteDifferences) {
  ExperimentConfig config = TinyConfig();
  config.backbone.embed_dim = 4;
  config.backbone.hidden_dim = 8;
  config.generator.hidden_dim = 8;
  const DomainSequence data = LoadData(config);
  Rng rng(21);
  Backbone backbone(ResolveBackbone(config, data), rng);
  backbone.Freeze();
  const TemporalGenerator generator(
      ResolveGenerator(config, backbone.config()), rng);
  std::vector<Tensor> history;
  for (int t = 1; t <= 3; ++t) {
    history.push_back(
        InitPrompt(PromptKind::kDomainSpecific, 1, 4, rng, t).values.Detach());
  }
  Tensor general = NormalTensor({1, 4}, 0.5, rng, true);
  const std::vector<std::size_t> rows{0, 1, 2, 3, 4};
  const DomainDataset domain = data.source_train[3].Subset(rows);
  const Batch batch = FullBatch(domain);
  auto loss = [&] {
    const Tensor prompts[] = {generator.Generate(history), general};
    return backbone.Loss(PromptedForward(backbone, prompts, batch),
                         batch.targets);
  };
  ParameterList params = generator.Parameters("generator");
  params.emplace_back("general", general);
  for (auto& [name, p] : params) p.ZeroGrad();
  Backward(loss());
  double worst = 0.0;
  for (auto& [name, p] : params) {
    ASSERT_TRUE(p.has_grad()) << name;
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    const std::vector<double> numeric =
        NumericGradient([&] { NoGradGuard g; return loss().item(); }, p);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double scale =
          std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-3});
      worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
    }
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(PipelineTest, TrainingIsDeterministicPerSeed) {
  const ExperimentConfig config = TinyConfig();
  const DomainSequence data = LoadData(config);
  const TrainedArtifacts a = TrainAll(config, data, 5);
  const TrainedArtifacts b = TrainAll(config, data, 5);
  const TrainedArtifacts c = TrainAll(config, data, 6);
  const Tensor ya = InferTarget(a, data.targets[0]);
  EXPECT_TRUE(SameValues(ya, InferTarget(b, data.targets[0])));
  EXPECT_FALSE(SameValues(ya, InferTarget(c, data.targets[0])));
}

TEST(PipelineTest, ArtifactsRoundTripAndInferenceCreatesNoParameters) {
  const ExperimentConfig config = TinyConfig();
  const DomainSequence data = LoadData(config);
  const TrainedArtifacts trained = TrainAll(config, data, 7);
  const fs::path dir = fs::path(::testing::TempDir()) / "tempo_artifacts";
  fs::remove_all(dir);
  trained.Save(dir);
  const TrainedArtifacts loaded = TrainedArtifacts::Load(dir);
  EXPECT_EQ(loaded.backbone->Checksum(), trained.backbone->Checksum());
  EXPECT_EQ(BankChecksum(loaded.bank), BankChecksum(trained.bank));

  const std::uint64_t before = TrainableLeavesCreated();
  const Tensor y = InferTarget(loaded, data.targets[0]);
  EXPECT_EQ(TrainableLeavesCreated(), before);
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(SameValues(y, InferTarget(trained, data.targets[0])));
  EXPECT_THROW(TrainedArtifacts::Load(dir / "missing"), DataError);
}

TEST(PipelineTest, DisabledComponentsBecomeZeroTokens) {
  ExperimentConfig config = TinyConfig();
  config.components = PromptComponents::Parse("pt_only");
  const DomainSequence data = LoadData(config);
  const TrainedArtifacts a = TrainAll(config, data, 1);
  const std::vector<Tensor> prompts = TargetPrompts(a);
  ASSERT_EQ(prompts.size(), 2u);
  for (double v : prompts[1].data()) EXPECT_EQ(v, 0.0);
  EXPECT_NE(a.generator, nullptr);
}

// ---------------------------------------------------------------------------

int RunCli(const std::string& args) {
  const std::string cmd =
      std::string(TEMPO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path WriteConfig(const std::string& name, const std::string& text) {
  const fs::path dir = fs::path(::testing::TempDir()) / "tempo_cli";
  fs::create_directories(dir);
  std::ofstream(dir / name) << text;
  return dir / name;
}

TEST(CliTest, ExitCodesFollowErrorKinds) {
  const fs::path ok = WriteConfig("ok.ini", kTinyConfig);
  const fs::path out = ok.parent_path() / "data";
  EXPECT_EQ(RunCli("generate-data --config " + ok.string() + " --out " +
                   out.string()),
            0);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_EQ(RunCli("generate-data --config /nonexistent.ini"), 1);
  EXPECT_EQ(RunCli("frobnicate --config " + ok.string()), 1);
  const fs::path bad = WriteConfig("bad.ini", "[pretrain]\nlr = fast\n");
  EXPECT_EQ(RunCli("pretrain --config " + bad.string()), 1);
  const fs::path missing = WriteConfig(
      "missing.ini", "[data]\nsource = csv\nmanifest = nowhere.ini\n");
  EXPECT_EQ(RunCli("pretrain --config " + missing.string()), 2);
  EXPECT_EQ(RunCli("evaluate --config " + ok.string() + " --artifacts " +
                   (ok.parent_path() / "none").string()),
            2);
  const fs::path diverge = WriteConfig(
      "diverge.ini", [] {
        std::string text = kTinyConfig;
        text.replace(text.find("lr = 1e-3"), 9, "lr = 1e300");
        return text;
      }());
  EXPECT_EQ(RunCli("pretrain --config " + diverge.string() + " --out " +
                   (ok.parent_path() / "art").string()),
            3);
}

}  // namespace
}  // namespace tempo
