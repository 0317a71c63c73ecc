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

#include <benchmark/benchmark.h>

#include <vector>

#include "tempo/backbone.h"
#include "tempo/nn.h"
#include "tempo/prompts.h"
#include "tempo/runtime.h"
#include "tempo/synthetic.h"
#include "tempo/temporal_generator.h"
#include "tempo/tensor.h"

namespace tempo {
namespace {

void BM_MatMul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = NormalTensor({n, n}, 1.0, rng, false);
  Tensor b = NormalTensor({n, n}, 1.0, rng, false);
  for (auto _ : state) benchmark::DoNotOptimize(MatMul(a, b));
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_MatMul)->Arg(16)->Arg(64)->Arg(256);

void BM_EncoderForwardBackward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  TransformerEncoderLayer layer({width, 4, 2 * width, 2}, rng);
  Tensor x = NormalTensor({32, 22, width}, 1.0, rng, false);
  for (auto _ : state) {
    Tensor loss = Mean(layer.Forward(x));
    Backward(loss);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(16)->Arg(32)->Arg(64);

DomainDataset BenchDomain() {
  SyntheticOptions options;
  options.family = SeriesFamily::kCosine;
  options.drift = DriftKind::kCosPhaseFreqAlternation;
  options.num_domains = 2;
  options.windows.stride = 25;
  return BuildDomains(options).front();
}

// One Adam step on a single prompt token through a frozen backbone.
void BM_PromptStep(benchmark::State& state) {
  const DomainDataset domain = BenchDomain();
  BackboneConfig config;
  config.embed_dim = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  Backbone backbone(config, rng);
  backbone.Freeze();
  PromptVector prompt =
      InitPrompt(PromptKind::kDomainSpecific, 1, config.embed_dim, rng, 1);
  Adam adam(std::vector<Tensor>{prompt.values}, AdamOptions{1e-3});
  std::vector<std::size_t> rows(32);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const Batch batch = MakeBatch(domain, rows);
  const Tensor prompts[] = {prompt.values};
  for (auto _ : state) {
    Tensor loss = backbone.Loss(PromptedForward(backbone, prompts, batch),
                                batch.targets);
    adam.ZeroGrad();
    Backward(loss);
    adam.Step();
  }
  state.SetItemsProcessed(state.iterations() * rows.size());
}
BENCHMARK(BM_PromptStep)->Arg(16)->Arg(32)->Arg(64);

void BM_GeneratorCausalPass(benchmark::State& state) {
  const auto domains = static_cast<std::size_t>(state.range(0));
  GeneratorConfig config;
  config.prompt_dim = 32;
  config.mode = GeneratorMode::kNonSequential;
  Rng rng(4);
  TemporalGenerator generator(config, rng);
  std::vector<Tensor> history;
  for (std::size_t t = 0; t < domains; ++t) {
    history.push_back(NormalTensor({1, 32}, 0.02, rng, false));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(generator.GenerateAllCausal(history));
  }
}
BENCHMARK(BM_GeneratorCausalPass)->Arg(4)->Arg(19)->Arg(49);

}  // namespace
}  // namespace tempo

int main(int argc, char** argv) {
  tempo::ConfigureAllocator();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
