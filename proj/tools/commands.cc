// Copyright 2026 The sprl Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "commands.h"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

#include "sprl/ablation.h"
#include "sprl/error.h"
#include "sprl/eval_harness.h"
#include "sprl/library_io.h"
#include "sprl/lm_oracle.h"
#include "sprl/mips_index.h"
#include "sprl/selection.h"
#include "sprl/synthetic_world.h"

namespace sprl::cli {

namespace {

constexpr int kOutputVersion = 1;

Json ReadJsonFile(const std::string& path) {
  try {
    return Json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::parse_error& ex) {
    throw FormatError(FormatErrc::kBadJson, path + ": " + ex.what());
  }
}

void WriteJson(const std::string& path, const OrderedJson& j) { WriteTextFile(path, j.dump(2) + "\n"); }

OrderedJson ChosenJson(const SelectionResult& s) {
  OrderedJson arr = OrderedJson::array();
  for (const auto& [id, w] : s.chosen) arr.push_back({{"id", id}, {"weight", w}});
  return arr;
}

CandidateTally TallyFromJson(const Json& j, const std::string& path) {
  try {
    CandidateTally t;
    t.counts = j.at("counts").get<std::map<std::string, std::uint64_t>>();
    t.total = j.at("total").get<std::uint64_t>();
    if (j.contains("scores")) t.scores = j.at("scores").get<std::map<std::string, double>>();
    std::uint64_t sum = 0;
    for (const auto& [id, c] : t.counts) {
      if (c == 0) throw ValidationError(path + ": count of '" + id + "' is zero");
      sum += c;
    }
    if (sum != t.total) {
      throw ValidationError(path + ": total " + std::to_string(t.total) + " differs from the sum of counts " +
                            std::to_string(sum));
    }
    return t;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(FormatErrc::kBadField, path + ": malformed tally: " + ex.what());
  }
}

}  // namespace

void BuildLibraryCommand(const BuildLibraryArgs& args) {
  const auto method = ParseSamplingMethod(args.method);
  auto embeddings = ReadEmbeddingFile(args.embeddings);
  const auto keys = ReadKeyFile(args.keys);
  auto library = BuildLibrary(std::move(embeddings), GroupByEmbedding(keys), args.n, method, args.seed);
  SaveLibrary(library, args.out);
  std::cout << "library: " << library.embeddings().size() << " embeddings, " << library.size() << " entries, key_dim "
            << library.key_dim() << " -> " << args.out << "\n";
}

void RetrieveCommand(const RetrieveArgs& args) {
  auto library = std::make_shared<const SourcePromptLibrary>(LoadLibrary(args.library));
  const MipsIndex index(library, args.cosine ? Metric::kCosine : Metric::kInnerProduct);
  std::vector<KeyVector> pool;
  for (auto& r : ReadKeyFile(args.queries)) pool.push_back(std::move(r.key));
  const auto queries = SampleQueries(pool, args.q, args.seed);
  const auto hits = index.BatchSearch(queries, args.top_n, args.threads);
  const auto tally = AggregateFrequency(hits);

  OrderedJson j;
  j["version"] = kOutputVersion;
  j["config"] = {{"library", args.library}, {"queries", args.queries}, {"q", args.q},
                 {"top_n", args.top_n},     {"seed", args.seed},       {"metric", args.cosine ? "cosine" : "inner_product"}};
  j["total"] = tally.total;
  j["counts"] = tally.counts;
  OrderedJson lists = OrderedJson::array();
  for (const auto& list : hits) {
    OrderedJson lj = OrderedJson::array();
    for (const auto& h : list) lj.push_back({{"ordinal", h.ordinal}, {"embedding_id", h.embedding_id}, {"score", h.score}});
    lists.push_back(std::move(lj));
  }
  j["hits"] = std::move(lists);
  WriteJson(args.out, j);
  std::cout << "retrieved " << tally.total << " hits over " << tally.counts.size() << " embeddings -> " << args.out
            << "\n";
}

void SelectCommand(const SelectArgs& args) {
  const auto strategy = ParseStrategy(args.strategy);
  auto tally = TallyFromJson(ReadJsonFile(args.tally), args.tally);

  FileProvider provider;
  OptionProbsFn probs;
  if (strategy == Strategy::kVariance || strategy == Strategy::kVarianceInterpolation) {
    if (args.probes.empty() || args.hard_prompt.empty()) {
      throw ValidationError("strategy '" + args.strategy + "' needs --probes and --hard-prompt");
    }
    for (auto& p : ReadProbeTable(args.probes)) provider.AddProbe(std::move(p));
    probs = [&](const std::string& id) { return ProbeOptions(provider, id, args.hard_prompt).option_probs; };
  }
  auto result = Select(strategy, tally, args.n_prime, probs);

  OrderedJson j;
  j["version"] = kOutputVersion;
  j["config"] = {{"tally", args.tally},   {"strategy", std::string(StrategyName(strategy))},
                 {"n_prime", args.n_prime}, {"probes", args.probes},
                 {"hard_prompt", args.hard_prompt}, {"library", args.library}};
  j["strategy"] = std::string(StrategyName(strategy));
  j["chosen"] = ChosenJson(result);
  j["prompt_key"] = PromptKey(result.chosen);
  if (!tally.scores.empty()) j["scores"] = tally.scores;
  if (!args.library.empty()) {
    const auto library = LoadLibrary(args.library);
    AttachPrompt(result, library);
    std::vector<double> values(result.prompt->values().begin(), result.prompt->values().end());
    j["prompt"] = {{"prefix_len", result.prompt->rows()}, {"model_dim", result.prompt->cols()}, {"values", values}};
  }
  WriteJson(args.out, j);
  std::cout << "selected " << PromptKey(result.chosen) << " (" << StrategyName(strategy) << ") -> " << args.out << "\n";
}

void EvaluateCommand(const EvaluateArgs& args) {
  const auto strategy = ParseStrategy(args.strategy);
  auto library = std::make_shared<const SourcePromptLibrary>(LoadLibrary(args.library));
  const MipsIndex index(library, args.cosine ? Metric::kCosine : Metric::kInnerProduct);
  const auto bundle = ReadTaskFile(args.task);
  PipelineConfig config{args.q, args.top_n, args.n_prime, args.seed, args.threads};
  auto report = EvaluateTask(bundle.task, index, *bundle.provider, strategy, config, args.seeds, args.oracle);
  report.config["library_path"] = args.library;
  report.config["task_path"] = args.task;
  report.config["provider"] = bundle.provider_json;
  WriteJson(args.report, ReportToJson(report));
  std::printf("%s %s: mean %.4f std %.4f over %zu prompts x %zu seeds -> %s\n", report.task_id.c_str(),
              std::string(StrategyName(strategy)).c_str(), report.mean, report.std, report.per_prompt.size(),
              report.seeds.size(), args.report.c_str());
}

void AblateCommand(const AblateArgs& args) {
  const Json grid = ReadJsonFile(args.grid);
  const auto base = AblationBaseFromJson(ReadJsonFile(args.base));
  const auto cells = RunAblation(OrderedJson::parse(grid.dump()), base);
  WriteTextFile(args.out, AblationTableCsv(cells));
  if (!args.reports.empty()) {
    OrderedJson all;
    all["version"] = kOutputVersion;
    all["base"] = AblationBaseToJson(base);
    all["grid"] = OrderedJson::parse(grid.dump());
    OrderedJson arr = OrderedJson::array();
    for (const auto& c : cells) {
      OrderedJson cj;
      for (const auto& [axis, v] : c.axis_values) cj["axes"][axis] = v;
      cj["planted_hit_rate"] = c.planted_hit_rate;
      cj["report"] = ReportToJson(c.report);
      arr.push_back(std::move(cj));
    }
    all["cells"] = std::move(arr);
    WriteJson(args.reports, all);
  }
  std::cout << cells.size() << " ablation cells -> " << args.out << "\n";
}

void GenerateWorldCommand(const GenerateWorldArgs& args) {
  WorldConfig config;
  if (!args.config.empty()) config = WorldConfigFromJson(ReadJsonFile(args.config));
  config.seed = args.seed;
  const auto world = GenerateWorld(config);
  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);

  WriteEmbeddingFile(dir / "embeddings.jsonl", world.embeddings);
  std::vector<KeyRecord> keys;
  for (const auto& [id, rows] : world.instances) {
    for (const auto& k : rows) keys.push_back({id, false, k});
  }
  WriteKeyFile(dir / "keys.jsonl", keys);
  std::vector<KeyRecord> queries;
  for (std::size_t i = 0; i < world.task.instance_ids.size(); ++i) {
    queries.push_back({world.task.instance_ids[i], true, world.task.keys[i]});
  }
  WriteKeyFile(dir / "queries.jsonl", queries);
  WriteTaskFile(dir / "task.json", world.task, SyntheticConfigToJson(world.provider));

  const SyntheticProvider provider(world.provider);
  std::vector<OptionProbeResult> probes;
  for (const auto& hp : world.task.hard_prompt_ids) {
    for (const auto& e : world.embeddings) probes.push_back(ProbeOptions(provider, e.id, hp));
  }
  WriteProbeTable(dir / "probes.jsonl", probes);

  OrderedJson meta;
  meta["version"] = kOutputVersion;
  meta["config"] = WorldConfigToJson(config);
  meta["planted_id"] = world.planted_id;
  WriteJson((dir / "world.json").string(), meta);
  std::cout << "world seed " << config.seed << ": " << world.embeddings.size() << " embeddings, planted "
            << world.planted_id << " -> " << dir.string() << "\n";
}

int ValidateCommand(const ValidateArgs& args) {
  ValidationReport report;
  if (args.kind == "keys") {
    report = ValidateKeyFile(args.file);
  } else if (args.kind == "embeddings") {
    report = ValidateEmbeddingFile(args.file);
  } else if (args.kind == "probes") {
    report = ValidateProbeTable(args.file);
  } else if (args.kind == "records") {
    report = ValidateRecordTable(args.file);
  } else if (args.kind == "library") {
    try {
      const auto lib = LoadLibrary(args.file);
      report.records = lib.size();
    } catch (const FormatError& ex) {
      report.errors.push_back(ex.what());
    }
  } else if (args.kind == "task") {
    try {
      const auto bundle = ReadTaskFile(args.file);
      report.records = bundle.task.instance_ids.size();
    } catch (const FormatError& ex) {
      report.errors.push_back(ex.what());
    }
  } else {
    throw ValidationError("unknown kind '" + args.kind + "' (expected keys|embeddings|probes|records|library|task)");
  }
  for (const auto& e : report.errors) std::cout << "error: " << e << "\n";
  for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
  std::cout << args.file << ": " << report.records << " records, " << report.errors.size() << " errors, "
            << report.warnings.size() << " warnings\n";
  return report.ok() ? kExitOk : kExitFormat;
}

void ReplayCommand(const ReplayArgs& args) {
  const auto fixture = ReadRetrievalFixture(args.fixture);
  const auto replay = ReplayRetrievalFixture(fixture);
  for (std::size_t i = 0; i < fixture.rows.size(); ++i) {
    const auto& r = replay.retrieved.per_prompt[i];
    std::printf("%-32s %7.2f  %s\n", r.hard_prompt_id.c_str(), r.accuracy, r.runs.front().chosen.front().id.c_str());
  }
  std::printf("avg baseline %.2f  retrieved %.2f  oracle %.2f\n", replay.baseline.mean, replay.retrieved.mean,
              replay.oracle.mean);
  if (!args.out.empty()) {
    OrderedJson j;
    j["version"] = kOutputVersion;
    j["fixture"] = args.fixture;
    j["baseline"] = ReportToJson(replay.baseline);
    j["retrieved"] = ReportToJson(replay.retrieved);
    j["oracle"] = ReportToJson(replay.oracle);
    WriteJson(args.out, j);
  }
}

}  // namespace sprl::cli
