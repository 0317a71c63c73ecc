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

// tempo: command-line driver for the temporal prompt pipeline.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <boost/program_options.hpp>
#include <nlohmann/json.hpp>

#include "tempo/errors.h"
#include "tempo/experiment.h"
#include "tempo/pipeline.h"
#include "tempo/runtime.h"

namespace po = boost::program_options;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

const char* kUsage =
    "usage: tempo <command> --config PATH [--seed N] [--out DIR] [--runs K]\n"
    "\n"
    "commands:\n"
    "  generate-data   write the synthetic domains as CSV plus a manifest\n"
    "  pretrain        phase 1: train and freeze the backbone\n"
    "  learn-prompts   phase 2: one prompt per source domain\n"
    "  learn-temporal  phase 3: temporal generator and general prompt\n"
    "  evaluate        score saved artifacts on the target domains\n"
    "  ablate          run one ablation axis (--axis) or all of them\n"
    "  run-all         multi-seed experiment grid and report\n";

struct Args {
  std::string command;
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> threads;
  std::optional<fs::path> artifacts;
  std::string axis = "all";
};

tempo::ExperimentConfig LoadConfig(const Args& args) {
  tempo::ExperimentConfig config =
      tempo::ExperimentConfig::FromFile(args.config);
  if (args.seed) config.seed = *args.seed;
  if (args.runs) config.runs = *args.runs;
  if (args.threads) config.threads = *args.threads;
  config.Validate();
  return config;
}

fs::path OutDir(const Args& args, const char* fallback) {
  return args.out ? *args.out : fs::path(fallback);
}

fs::path ArtifactDir(const Args& args) {
  if (args.artifacts) return *args.artifacts;
  return OutDir(args, "artifacts");
}

int GenerateData(const Args& args) {
  const tempo::ExperimentConfig config = LoadConfig(args);
  if (config.data.source != "synthetic") {
    throw tempo::ConfigError("generate-data needs [data] source = synthetic");
  }
  const fs::path out = OutDir(args, "data");
  tempo::WriteSyntheticData(config.data.synthetic, out);
  std::cout << "wrote " << config.data.synthetic.num_domains
            << " domains to " << out.string() << "\n";
  return 0;
}

int Pretrain(const Args& args) {
  const tempo::ExperimentConfig config = LoadConfig(args);
  const tempo::DomainSequence data = tempo::LoadData(config);
  tempo::TrainedArtifacts a;
  a.components = config.components;
  a.autoregressive_targets = config.autoregressive_targets;
  tempo::TrainingLog log;
  a.backbone = tempo::RunPhase1Pretrain(config, data, config.seed, &log);
  a.logs.push_back(std::move(log));
  const fs::path dir = ArtifactDir(args);
  a.Save(dir);
  std::cout << "backbone: " << tempo::CountParameters(*a.backbone)
            << " parameters, saved to " << dir.string() << "\n";
  return 0;
}

int LearnPrompts(const Args& args) {
  const tempo::ExperimentConfig config = LoadConfig(args);
  const tempo::DomainSequence data = tempo::LoadData(config);
  const fs::path dir = ArtifactDir(args);
  tempo::TrainedArtifacts a = tempo::TrainedArtifacts::Load(dir);
  tempo::TrainingLog log;
  a.bank = tempo::RunPhase2DomainPrompts(config, *a.backbone, data,
                                         config.seed, &log);
  a.logs.push_back(std::move(log));
  a.Save(dir);
  std::cout << a.bank.domain_prompts.size() << " domain prompts saved to "
            << dir.string() << "\n";
  return 0;
}

int LearnTemporal(const Args& args) {
  const tempo::ExperimentConfig config = LoadConfig(args);
  const tempo::DomainSequence data = tempo::LoadData(config);
  const fs::path dir = ArtifactDir(args);
  tempo::TrainedArtifacts a = tempo::TrainedArtifacts::Load(dir);
  if (a.bank.domain_prompts.empty()) {
    throw tempo::StateError("run learn-prompts before learn-temporal");
  }
  tempo::TemporalResult result = tempo::RunPhase3Temporal(
      config, *a.backbone, a.bank, data, config.seed, config.components,
      config.generator.mode);
  a.generator = std::move(result.generator);
  a.bank.general = std::move(result.general);
  a.components = config.components;
  a.autoregressive_targets = config.autoregressive_targets;
  a.logs.push_back(std::move(result.log));
  a.Save(dir);
  std::cout << "temporal generator saved to " << dir.string() << "\n";
  return 0;
}

int Evaluate(const Args& args) {
  const tempo::ExperimentConfig config = LoadConfig(args);
  const tempo::DomainSequence data = tempo::LoadData(config);
  const tempo::TrainedArtifacts a =
      tempo::TrainedArtifacts::Load(ArtifactDir(args));
  tempo::ExperimentResult result;
  for (const tempo::DomainDataset& target : data.targets) {
    const std::size_t offset = result.traces.size();
    const tempo::Tensor vanilla = tempo::PredictVanilla(*a.backbone, target);
    const tempo::Tensor ours = tempo::InferTarget(a, target, offset);
    tempo::PredictionTrace trace;
    trace.dataset = config.name;
    trace.domain = target.domain_index;
    for (const auto& [method, predictions] :
         {std::pair{"vanilla", &vanilla}, std::pair{"ours", &ours}}) {
      result.records.push_back(tempo::MakeRecord(
          config.name, "", method, std::to_string(target.domain_index),
          config.metric,
          {tempo::ComputeMetric(predictions->data(), target.targets,
                                config.metric)}));
      std::vector<double> column;
      for (std::size_t i = 0; i < target.size(); ++i) {
        column.push_back(predictions->at(i * target.output_dim));
        if (method == std::string("vanilla")) {
          trace.truth.push_back(target.targets[i * target.output_dim]);
        }
      }
      trace.predictions[method] = std::move(column);
    }
    result.traces.push_back(std::move(trace));
  }
  tempo::ParameterCounts counts;
  counts.backbone = tempo::CountParameters(*a.backbone);
  if (a.generator) counts.generator = tempo::CountParameters(*a.generator);
  if (a.bank.general) counts.general_prompt = a.bank.general->values.numel();
  for (const auto& [t, p] : a.bank.domain_prompts) {
    counts.domain_prompts += p.values.numel();
  }
  result.parameters.push_back(counts);
  const fs::path out = args.out ? *args.out / "report" : fs::path("report");
  tempo::EmitReport(result, out);
  std::cout << tempo::RecordsTable(result.records);
  return 0;
}

int Ablate(const Args& args) {
  const tempo::ExperimentConfig config = LoadConfig(args);
  std::vector<std::string> axes;
  if (args.axis == "all") {
    axes = tempo::AblationAxes();
  } else {
    axes = {args.axis};
  }
  tempo::ExperimentResult result;
  for (const std::string& axis : axes) {
    result.Append(tempo::RunAblation(config, axis));
  }
  tempo::EmitReport(result, OutDir(args, "report"));
  std::cout << tempo::RecordsTable(result.records);
  return 0;
}

int RunAll(const Args& args) {
  const tempo::ExperimentConfig config = LoadConfig(args);
  tempo::ExperimentResult result = tempo::RunExperiment(config);
  if (config.source.Has("ablation.axes")) {
    for (const std::string& axis : config.source.GetList("ablation.axes")) {
      result.Append(tempo::RunAblation(config, axis));
    }
  }
  tempo::EmitReport(result, OutDir(args, "report"));
  std::cout << tempo::RecordsTable(result.records);
  return 0;
}

int Dispatch(const Args& args) {
  if (args.command == "generate-data") return GenerateData(args);
  if (args.command == "pretrain") return Pretrain(args);
  if (args.command == "learn-prompts") return LearnPrompts(args);
  if (args.command == "learn-temporal") return LearnTemporal(args);
  if (args.command == "evaluate") return Evaluate(args);
  if (args.command == "ablate") return Ablate(args);
  if (args.command == "run-all") return RunAll(args);
  throw tempo::ConfigError("unknown command '" + args.command + "'");
}

// Returns false when only help was requested.
bool ParseArgs(int argc, char** argv, Args& args) {
  po::options_description options("options");
  options.add_options()
      ("help,h", "show this help")
      ("config", po::value<std::string>(), "experiment config (INI)")
      ("seed", po::value<std::uint64_t>(), "base seed; runs use seed + i")
      ("out", po::value<std::string>(), "output directory")
      ("runs", po::value<std::size_t>(), "number of seeded runs")
      ("threads", po::value<std::size_t>(), "worker threads")
      ("artifacts", po::value<std::string>(),
       "artifact directory (defaults to --out)")
      ("axis", po::value<std::string>(),
       "ablation axis: prompt_components, num_domains, prompt_size, "
       "generator_layers or all");
  po::options_description hidden;
  hidden.add_options()("command", po::value<std::string>());
  po::options_description all;
  all.add(options).add(hidden);
  po::positional_options_description positional;
  positional.add("command", 1);

  po::variables_map vm;
  try {
    po::store(po::command_line_parser(argc, argv)
                  .options(all)
                  .positional(positional)
                  .run(),
              vm);
    po::notify(vm);
  } catch (const po::error& e) {
    throw tempo::ConfigError(e.what());
  }
  if (vm.count("help") || !vm.count("command")) {
    std::cout << kUsage << "\n" << options;
    if (!vm.count("help")) throw tempo::ConfigError("no command given");
    return false;
  }
  args.command = vm["command"].as<std::string>();
  if (!vm.count("config")) throw tempo::ConfigError("--config is required");
  args.config = vm["config"].as<std::string>();
  if (vm.count("seed")) args.seed = vm["seed"].as<std::uint64_t>();
  if (vm.count("out")) args.out = fs::path(vm["out"].as<std::string>());
  if (vm.count("runs")) args.runs = vm["runs"].as<std::size_t>();
  if (vm.count("threads")) args.threads = vm["threads"].as<std::size_t>();
  if (vm.count("artifacts")) {
    args.artifacts = fs::path(vm["artifacts"].as<std::string>());
  }
  if (vm.count("axis")) args.axis = vm["axis"].as<std::string>();
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  tempo::ConfigureAllocator();
  try {
    Args args;
    if (!ParseArgs(argc, argv, args)) return 0;
    return Dispatch(args);
  } catch (const tempo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tempo::ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tempo::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const tempo::StateError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const tempo::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}
