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
#include <fstream>

#include <nlohmann/json.hpp>

#include "tempo/checkpoint.h"
#include "tempo/errors.h"
#include "tempo/parallel.h"

namespace tempo {

namespace {

// Sub-stream ids for DeriveSeed.
enum SeedStream : std::uint64_t {
  kBackboneInit = 1,
  kPretrainOrder = 2,
  kDomainPrompts = 3,
  kTemporal = 4,
};

const std::vector<std::string>& KnownMethods() {
  static const std::vector<std::string> methods{
      "vanilla", "ours", "ours_no_PG", "ours_no_PT", "ours_nonsequential"};
  return methods;
}

std::size_t NonNegative(const KeyValueFile& file, const std::string& key,
                        std::size_t fallback) {
  const long v = file.GetInt(key, static_cast<long>(fallback));
  if (v < 0) throw ConfigError(key + " must not be negative");
  return static_cast<std::size_t>(v);
}

PhaseOptions ReadPhase(const KeyValueFile& file, const std::string& section,
                       PhaseOptions options) {
  options.epochs = NonNegative(file, section + ".epochs", options.epochs);
  options.batch_size =
      NonNegative(file, section + ".batch_size", options.batch_size);
  options.lr = file.GetDouble(section + ".lr", options.lr);
  options.patience = NonNegative(file, section + ".patience", options.patience);
  if (!(options.lr > 0.0)) throw ConfigError(section + ".lr must be positive");
  return options;
}

}  // namespace

PromptComponents PromptComponents::Parse(const std::string& name) {
  if (name == "both") return {true, true};
  if (name == "pg_only") return {true, false};
  if (name == "pt_only") return {false, true};
  throw ConfigError("unknown prompt components '" + name +
                    "' (expected both, pg_only or pt_only)");
}

std::string PromptComponents::Name() const {
  if (general && temporal) return "both";
  if (general) return "pg_only";
  if (temporal) return "pt_only";
  return "none";
}

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::FromFile(const std::filesystem::path& path) {
  return FromKeyValue(KeyValueFile::Read(path));
}

ExperimentConfig ExperimentConfig::FromKeyValue(const KeyValueFile& file) {
  ExperimentConfig c;
  c.source = file;
  c.name = file.GetString("experiment.name", c.name);
  c.seed = static_cast<std::uint64_t>(
      NonNegative(file, "experiment.seed", static_cast<std::size_t>(c.seed)));
  c.runs = NonNegative(file, "experiment.runs", c.runs);
  c.threads = NonNegative(file, "experiment.threads", c.threads);
  c.prompt_tokens = NonNegative(file, "experiment.prompt_tokens", c.prompt_tokens);
  c.autoregressive_targets =
      file.GetBool("experiment.autoregressive_targets", c.autoregressive_targets);
  if (auto v = file.Find("experiment.components")) {
    c.components = PromptComponents::Parse(*v);
  }
  if (auto v = file.Find("experiment.metric")) c.metric = ParseMetricKind(*v);
  if (file.Has("experiment.methods")) c.methods = file.GetList("experiment.methods");

  DataSpec& d = c.data;
  d.source = file.GetString("data.source", d.source);
  d.num_sources = NonNegative(file, "data.num_sources", d.num_sources);
  d.train_fraction = file.GetDouble("data.train_fraction", d.train_fraction);
  if (auto v = file.Find("data.manifest")) {
    std::filesystem::path p = *v;
    if (p.is_relative() && !file.source().empty()) {
      p = file.source().parent_path() / p;
    }
    d.manifest = p;
  }
  SyntheticOptions& s = d.synthetic;
  if (auto v = file.Find("data.family")) s.family = ParseSeriesFamily(*v);
  if (auto v = file.Find("data.drift")) s.drift = ParseDriftKind(*v);
  s.num_domains = NonNegative(file, "data.num_domains", s.num_domains);
  s.windows.window = NonNegative(file, "data.window", s.windows.window);
  s.windows.horizon = NonNegative(file, "data.horizon", s.windows.horizon);
  s.windows.stride = NonNegative(file, "data.stride", s.windows.stride);
  s.windows.fixed_length =
      file.GetBool("data.fixed_length", s.windows.fixed_length);
  s.windows.seed = static_cast<std::uint64_t>(NonNegative(
      file, "data.window_seed", static_cast<std::size_t>(s.windows.seed)));
  if (auto v = file.Find("data.task")) {
    if (*v == "forecast") {
      s.task = SyntheticTask::kForecast;
    } else if (*v == "threshold") {
      s.task = SyntheticTask::kThresholdClassification;
    } else {
      throw ConfigError("unknown synthetic task '" + *v +
                        "' (expected forecast or threshold)");
    }
  }
  s.threshold_start = file.GetDouble("data.threshold_start", s.threshold_start);
  s.threshold_step = file.GetDouble("data.threshold_step", s.threshold_step);

  c.backbone.Update(file);
  c.generator.Update(file);
  c.pretrain = ReadPhase(file, "pretrain", c.pretrain);
  c.prompts = ReadPhase(file, "prompts", c.prompts);
  c.temporal = ReadPhase(file, "temporal", c.temporal);
  c.Validate();
  return c;
}

void ExperimentConfig::Validate() const {
  if (data.source != "synthetic" && data.source != "csv") {
    throw ConfigError("data.source must be synthetic or csv");
  }
  if (data.source == "csv" && data.manifest.empty()) {
    throw ConfigError("data.manifest is required for csv data");
  }
  if (data.source == "synthetic") {
    const std::size_t total = data.synthetic.num_domains;
    const std::size_t tau = data.num_sources == 0 ? total - 1 : data.num_sources;
    if (total < 3 || tau < 2 || tau >= total) {
      throw ConfigError(
          "need at least two source domains and one target domain");
    }
  }
  if (!(data.train_fraction > 0.0 && data.train_fraction <= 1.0)) {
    throw ConfigError("data.train_fraction must be in (0, 1]");
  }
  if (runs == 0) throw ConfigError("experiment.runs must be at least 1");
  if (prompt_tokens == 0) throw ConfigError("experiment.prompt_tokens must be >= 1");
  if (methods.empty()) throw ConfigError("experiment.methods is empty");
  for (const auto& m : methods) {
    const auto& known = KnownMethods();
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }
  if (!components.general && !components.temporal) {
    throw ConfigError("at least one prompt component must be enabled");
  }
}

DomainSequence LoadData(const ExperimentConfig& config) {
  if (config.data.source == "csv") {
    DatasetManifest manifest = DatasetManifest::FromFile(config.data.manifest);
    DomainSequence seq = LoadPartitioned(manifest);
    if (seq.num_sources() < 2 || seq.targets.empty()) {
      throw DataError("need at least two source domains and one target domain");
    }
    return seq;
  }
  const SyntheticOptions& s = config.data.synthetic;
  const std::size_t tau =
      config.data.num_sources == 0 ? s.num_domains - 1 : config.data.num_sources;
  const TaskKind task = s.task == SyntheticTask::kForecast
                            ? TaskKind::kForecasting
                            : TaskKind::kBinaryClassification;
  return MakeSequence(BuildDomains(s), tau, config.data.train_fraction, task);
}

BackboneConfig ResolveBackbone(const ExperimentConfig& config,
                               const DomainSequence& data) {
  if (data.source_train.empty()) throw DataError("no source domains");
  const DomainDataset& first = data.source_train.front();
  BackboneConfig b = config.backbone;
  b.input_dim = first.input_dim;
  b.output_dim = first.output_dim;
  b.task = data.task;
  auto padded = [](const std::vector<DomainDataset>& v) {
    return std::any_of(v.begin(), v.end(), [](const DomainDataset& d) {
      return !d.lengths.empty();
    });
  };
  b.variable_length = padded(data.source_train) || padded(data.source_test) ||
                      padded(data.targets);
  b.Validate();
  return b;
}

GeneratorConfig ResolveGenerator(const ExperimentConfig& config,
                                 const BackboneConfig& backbone) {
  GeneratorConfig g = config.generator;
  g.prompt_dim = backbone.embed_dim;
  g.prompt_tokens = config.prompt_tokens;
  g.Validate();
  return g;
}

// ---------------------------------------------------------------------------

std::shared_ptr<Backbone> RunPhase1Pretrain(const ExperimentConfig& config,
                                            const DomainSequence& data,
                                            std::uint64_t seed,
                                            TrainingLog* log) {
  Rng init(DeriveSeed(seed, kBackboneInit));
  auto backbone = std::make_shared<Backbone>(ResolveBackbone(config, data), init);
  PretrainOptions options;
  options.epochs = config.pretrain.epochs;
  options.batch_size = config.pretrain.batch_size;
  options.adam = config.pretrain.adam();
  options.seed = DeriveSeed(seed, kPretrainOrder);
  options.patience = config.pretrain.patience;
  if (!data.source_test.empty()) options.validation = &data.source_test.back();
  TrainingLog result = Pretrain(*backbone, data.source_train, options);
  if (log) *log = std::move(result);
  return backbone;
}

PromptBank RunPhase2DomainPrompts(const ExperimentConfig& config,
                                  const Backbone& backbone,
                                  const DomainSequence& data,
                                  std::uint64_t seed, TrainingLog* log) {
  if (!backbone.frozen()) throw StateError("phase 2 needs a frozen backbone");
  const std::size_t tau = data.num_sources();
  PromptLearningOptions options;
  options.epochs = config.prompts.epochs;
  options.batch_size = config.prompts.batch_size;
  options.tokens = config.prompt_tokens;
  options.adam = config.prompts.adam();
  options.seed = DeriveSeed(seed, kDomainPrompts);

  std::vector<std::optional<PromptVector>> prompts(tau);
  std::vector<TrainingLog> logs(tau);
  ParallelFor(tau, config.threads, [&](std::size_t i) {
    prompts[i] = LearnDomainPrompt(backbone, data.source_train[i], options,
                                   &logs[i]);
  });

  PromptBank bank;
  for (std::size_t i = 0; i < tau; ++i) {
    const int t = static_cast<int>(i) + 1;
    if (prompts[i]->domain_index != t) {
      throw DataError("source domains must be indexed 1..tau in order");
    }
    bank.domain_prompts[t] = std::move(*prompts[i]);
  }
  bank.metadata["seed"] = seed;
  bank.metadata["epochs"] = options.epochs;
  bank.metadata["lr"] = options.adam.lr;
  if (log) {
    log->phase = "prompts";
    log->entries.clear();
    for (const auto& l : logs) {
      log->entries.insert(log->entries.end(), l.entries.begin(), l.entries.end());
    }
  }
  return bank;
}

TemporalResult RunPhase3Temporal(const ExperimentConfig& config,
                                 const Backbone& backbone,
                                 const PromptBank& bank,
                                 const DomainSequence& data,
                                 std::uint64_t seed,
                                 PromptComponents components,
                                 GeneratorMode mode) {
  if (!backbone.frozen()) throw StateError("phase 3 needs a frozen backbone");
  const std::size_t tau = data.num_sources();
  if (tau < 2) throw ConfigError("phase 3 needs at least two source domains");
  bank.CheckContiguous();
  if (bank.domain_prompts.size() != tau) {
    throw StateError("prompt bank does not cover every source domain");
  }
  if (!components.general && !components.temporal) {
    throw ConfigError("at least one prompt component must be enabled");
  }

  TemporalResult result;
  result.log.phase = "temporal";
  Rng rng(DeriveSeed(seed, kTemporal));
  GeneratorConfig gc = ResolveGenerator(config, backbone.config());
  gc.mode = mode;
  const std::size_t k = gc.prompt_tokens, n = gc.prompt_dim;
  if (components.temporal) {
    result.generator = std::make_unique<TemporalGenerator>(gc, rng);
  }
  if (components.general) {
    result.general = InitPrompt(PromptKind::kGeneral, k, n, rng);
  }
  ParameterList params;
  if (result.generator) params = result.generator->Parameters("generator");
  if (result.general) params.emplace_back("general", result.general->values);
  Adam adam(params, config.temporal.adam());

  // Domain prompts enter as constants.
  std::vector<Tensor> history;
  for (const Tensor& p : bank.History()) history.push_back(p.Detach());
  const Tensor zero = Tensor::Zeros({k, n});
  const Tensor general = result.general ? result.general->values : zero;
  const std::size_t batch_size = config.temporal.batch_size;

  for (std::size_t epoch = 0; epoch < config.temporal.epochs; ++epoch) {
    if (mode == GeneratorMode::kSequential) {
      for (std::size_t t = 2; t <= tau; ++t) {
        const DomainDataset& domain = data.source_train[t - 1];
        double total = 0.0;
        for (const auto& rows : ShuffledBatches(domain.size(), batch_size, rng)) {
          Tensor pt = result.generator
                          ? result.generator->Generate(
                                std::span<const Tensor>(history.data(), t - 1))
                          : zero;
          const Tensor prompts[] = {pt, general};
          Batch batch = MakeBatch(domain, rows);
          Tensor loss = backbone.Loss(PromptedForward(backbone, prompts, batch),
                                      batch.targets);
          CheckFinite(loss.item(), "temporal prompt learning");
          adam.ZeroGrad();
          Backward(loss);
          adam.Step();
          total += loss.item() * static_cast<double>(rows.size());
        }
        result.log.entries.push_back(
            {epoch + 1, static_cast<int>(t),
             total / static_cast<double>(std::max<std::size_t>(domain.size(), 1))});
      }
    } else {
      // Every step sums the losses of one batch from each domain 2..tau,
      // all prompts coming from a single causal pass.
      std::vector<std::vector<std::vector<std::size_t>>> batches;
      std::size_t steps = 0;
      for (std::size_t t = 2; t <= tau; ++t) {
        batches.push_back(
            ShuffledBatches(data.source_train[t - 1].size(), batch_size, rng));
        steps = std::max(steps, batches.back().size());
      }
      std::vector<double> totals(tau - 1, 0.0);
      std::vector<std::size_t> seen(tau - 1, 0);
      for (std::size_t step = 0; step < steps; ++step) {
        std::vector<Tensor> generated;
        if (result.generator) {
          generated = result.generator->GenerateAllCausal(
              std::span<const Tensor>(history.data(), tau - 1));
        }
        Tensor loss;
        for (std::size_t t = 2; t <= tau; ++t) {
          const auto& domain_batches = batches[t - 2];
          if (domain_batches.empty()) continue;
          const auto& rows = domain_batches[step % domain_batches.size()];
          const Tensor prompts[] = {
              result.generator ? generated[t - 2] : zero, general};
          Batch batch = MakeBatch(data.source_train[t - 1], rows);
          Tensor l = backbone.Loss(PromptedForward(backbone, prompts, batch),
                                   batch.targets);
          if (step < domain_batches.size()) {
            totals[t - 2] += l.item() * static_cast<double>(rows.size());
            seen[t - 2] += rows.size();
          }
          loss = loss.defined() ? Add(loss, l) : l;
        }
        if (!loss.defined()) break;
        CheckFinite(loss.item(), "temporal prompt learning");
        adam.ZeroGrad();
        Backward(loss);
        adam.Step();
      }
      for (std::size_t t = 2; t <= tau; ++t) {
        result.log.entries.push_back(
            {epoch + 1, static_cast<int>(t),
             totals[t - 2] /
                 static_cast<double>(std::max<std::size_t>(seen[t - 2], 1))});
      }
    }
  }
  adam.ZeroGrad();
  if (result.generator) result.generator->SetTrainable(false);
  if (result.general) result.general->values.set_requires_grad(false);
  return result;
}

TrainedArtifacts TrainAll(const ExperimentConfig& config,
                          const DomainSequence& data, std::uint64_t seed) {
  TrainedArtifacts a;
  a.components = config.components;
  a.autoregressive_targets = config.autoregressive_targets;
  TrainingLog pretrain_log, prompt_log;
  a.backbone = RunPhase1Pretrain(config, data, seed, &pretrain_log);
  a.bank = RunPhase2DomainPrompts(config, *a.backbone, data, seed, &prompt_log);
  TemporalResult temporal =
      RunPhase3Temporal(config, *a.backbone, a.bank, data, seed,
                        config.components, config.generator.mode);
  a.generator = std::move(temporal.generator);
  a.bank.general = std::move(temporal.general);
  a.logs = {std::move(pretrain_log), std::move(prompt_log),
            std::move(temporal.log)};
  return a;
}

// ---------------------------------------------------------------------------

std::vector<Tensor> TargetPrompts(const TrainedArtifacts& artifacts,
                                  std::size_t offset) {
  if (!artifacts.backbone) throw StateError("artifacts have no backbone");
  if (artifacts.bank.domain_prompts.empty()) {
    throw StateError("artifacts have no domain prompts");
  }
  if (artifacts.components.temporal && !artifacts.generator) {
    throw StateError("artifacts have no temporal generator");
  }
  if (artifacts.components.general && !artifacts.bank.general) {
    throw StateError("artifacts have no general prompt");
  }
  NoGradGuard no_grad;
  const std::size_t n = artifacts.backbone->config().embed_dim;
  const std::size_t k = artifacts.bank.domain_prompts.begin()->second.tokens();
  const Tensor zero = Tensor::Zeros({k, n});
  Tensor pt = zero;
  if (artifacts.components.temporal) {
    std::vector<Tensor> history = artifacts.bank.History();
    if (artifacts.autoregressive_targets) {
      for (std::size_t i = 0; i < offset; ++i) {
        history.push_back(artifacts.generator->Generate(history));
      }
    }
    pt = artifacts.generator->Generate(history);
  }
  Tensor pg = artifacts.components.general ? artifacts.bank.general->values : zero;
  return {pt, pg};
}

Tensor InferTarget(const TrainedArtifacts& artifacts,
                   const DomainDataset& target, std::size_t offset) {
  if (target.size() == 0) throw DataError("InferTarget: empty target domain");
  NoGradGuard no_grad;
  std::vector<Tensor> prompts = TargetPrompts(artifacts, offset);
  return PromptedForward(*artifacts.backbone, prompts, FullBatch(target));
}

Tensor PredictVanilla(const Backbone& backbone, const DomainDataset& data) {
  if (data.size() == 0) throw DataError("PredictVanilla: empty dataset");
  NoGradGuard no_grad;
  return PromptedForward(backbone, {}, FullBatch(data));
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json BackboneJson(const BackboneConfig& c) {
  return {{"input_dim", c.input_dim},
          {"embed_dim", c.embed_dim},
          {"num_heads", c.num_heads},
          {"hidden_dim", c.hidden_dim},
          {"num_encoder_layers", c.num_encoder_layers},
          {"output_dim", c.output_dim},
          {"task", TaskKindName(c.task)},
          {"ff_depth", c.ff_depth},
          {"variable_length", c.variable_length}};
}

BackboneConfig BackboneFromJson(const nlohmann::json& j) {
  BackboneConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.num_encoder_layers = j.at("num_encoder_layers").get<std::size_t>();
  c.output_dim = j.at("output_dim").get<std::size_t>();
  c.task = ParseTaskKind(j.at("task").get<std::string>());
  c.ff_depth = j.at("ff_depth").get<int>();
  c.variable_length = j.at("variable_length").get<bool>();
  return c;
}

nlohmann::json GeneratorJson(const GeneratorConfig& c) {
  return {{"prompt_dim", c.prompt_dim},
          {"model_dim", c.model_dim},
          {"num_heads", c.num_heads},
          {"hidden_dim", c.hidden_dim},
          {"num_layers", c.num_layers},
          {"ff_depth", c.ff_depth},
          {"prompt_tokens", c.prompt_tokens},
          {"mode", GeneratorModeName(c.mode)}};
}

GeneratorConfig GeneratorFromJson(const nlohmann::json& j) {
  GeneratorConfig c;
  c.prompt_dim = j.at("prompt_dim").get<std::size_t>();
  c.model_dim = j.at("model_dim").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.ff_depth = j.at("ff_depth").get<int>();
  c.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
  c.mode = ParseGeneratorMode(j.at("mode").get<std::string>());
  return c;
}

}  // namespace

void TrainedArtifacts::Save(const std::filesystem::path& dir) const {
  if (!backbone) throw StateError("cannot save artifacts without a backbone");
  namespace fs = std::filesystem;
  fs::create_directories(dir / "backbone");
  fs::create_directories(dir / "generator");
  fs::create_directories(dir / "logs");
  SaveCheckpoint(dir / "backbone" / "backbone", backbone->Parameters(),
                 {{"config", BackboneJson(backbone->config())}});
  if (!bank.domain_prompts.empty() || bank.general) bank.Save(dir / "prompts");
  if (generator) {
    SaveCheckpoint(dir / "generator" / "generator", generator->Parameters(),
                   {{"config", GeneratorJson(generator->config())}});
  }
  for (const TrainingLog& log : logs) {
    std::ofstream out(dir / "logs" / (log.phase + ".csv"), std::ios::binary);
    if (!out) throw DataError("cannot write logs under " + dir.string());
    out << log.ToCsv();
  }
  nlohmann::json info = {{"components", components.Name()},
                         {"autoregressive_targets", autoregressive_targets}};
  std::ofstream out(dir / "artifacts.json", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "artifacts.json").string());
  out << info.dump(2) << '\n';
}

TrainedArtifacts TrainedArtifacts::Load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(dir / "artifacts.json");
  if (!in) throw DataError("missing " + (dir / "artifacts.json").string());
  nlohmann::json info;
  try {
    info = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed artifacts.json: " + std::string(e.what()));
  }
  TrainedArtifacts a;
  a.components = PromptComponents::Parse(info.at("components").get<std::string>());
  a.autoregressive_targets = info.value("autoregressive_targets", false);

  Checkpoint b = LoadCheckpoint(dir / "backbone" / "backbone");
  Rng rng(0);
  a.backbone = std::make_shared<Backbone>(
      BackboneFromJson(b.metadata.at("config")), rng);
  AssignParameters(a.backbone->Parameters(), b);
  a.backbone->Freeze();
  if (fs::exists(dir / "prompts" / "prompts.json")) {
    a.bank = PromptBank::Load(dir / "prompts");
  }
  if (fs::exists(dir / "generator" / "generator.json")) {
    Checkpoint g = LoadCheckpoint(dir / "generator" / "generator");
    a.generator = std::make_unique<TemporalGenerator>(
        GeneratorFromJson(g.metadata.at("config")), rng);
    AssignParameters(a.generator->Parameters(), g);
    a.generator->SetTrainable(false);
  }
  return a;
}

}  // namespace tempo
