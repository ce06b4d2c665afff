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

#include "sprl/eval_harness.h"

#include <algorithm>
#include <cmath>

#include "sprl/error.h"
#include "sprl/library_io.h"
#include "sprl/prompt_library.h"
#include "sprl/rng.h"

namespace sprl {

namespace {

template <typename Fn>
auto Stage(const char* name, Fn&& fn) -> decltype(fn()) {
  const std::string prefix = std::string("[") + name + "] ";
  try {
    return fn();
  } catch (const ValidationError& ex) {
    throw ValidationError(prefix + ex.what());
  } catch (const ProviderError& ex) {
    throw ProviderError(prefix + ex.what());
  }
}

OrderedJson ChosenToJson(std::span<const WeightedId> chosen) {
  OrderedJson arr = OrderedJson::array();
  for (const auto& [id, w] : chosen) arr.push_back({{"id", id}, {"weight", w}});
  return arr;
}

std::vector<WeightedId> ChosenFromJson(const Json& j) {
  std::vector<WeightedId> out;
  for (const auto& item : j) out.push_back({item.at("id").get<std::string>(), item.at("weight").get<double>()});
  return out;
}

std::filesystem::path Resolve(const std::filesystem::path& base_dir, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::vector<KeyVector> KeysFromJson(const Json& j) {
  std::vector<KeyVector> out;
  for (const auto& row : j) {
    KeyVector k;
    for (const auto& v : row) k.push_back(v.get<float>());
    out.push_back(std::move(k));
  }
  return out;
}

}  // namespace

std::span<const KeyVector> EvalTask::KeysFor(const std::string& hard_prompt_id) const {
  auto it = prompt_keys.find(hard_prompt_id);
  return it != prompt_keys.end() ? std::span<const KeyVector>(it->second) : std::span<const KeyVector>(keys);
}

void EvalTask::Validate(std::uint32_t key_dim) const {
  if (hard_prompt_ids.empty()) throw ValidationError("task '" + task_id + "' has no hard prompts");
  if (instance_ids.empty()) throw ValidationError("task '" + task_id + "' has no instances");
  if (option_count < 2) throw ValidationError("task '" + task_id + "' needs at least two answer options");
  for (const auto& hp : hard_prompt_ids) {
    const auto keys_for = KeysFor(hp);
    if (keys_for.empty()) throw ValidationError("hard prompt '" + hp + "' has no instance keys");
    if (keys_for.size() != instance_ids.size()) {
      throw ValidationError("hard prompt '" + hp + "' has " + std::to_string(keys_for.size()) + " keys for " +
                            std::to_string(instance_ids.size()) + " instances");
    }
    for (const auto& k : keys_for) {
      if (k.size() != key_dim) {
        throw ValidationError("task '" + task_id + "' key dimension " + std::to_string(k.size()) +
                              " does not match library key_dim " + std::to_string(key_dim));
      }
    }
  }
}

OrderedJson PipelineConfigToJson(const PipelineConfig& config) {
  return OrderedJson{{"queries", config.queries},
                     {"top_n", config.top_n},
                     {"n_prime", config.n_prime},
                     {"seed", config.seed}};
}

std::vector<std::size_t> SampleQueryIndices(std::size_t instance_count, std::size_t queries, std::uint64_t seed) {
  if (instance_count == 0) throw ValidationError("cannot sample queries from an empty task");
  if (queries == 0) throw ValidationError("query count must be at least 1");
  return SampleRandom(instance_count, queries, seed);
}

std::vector<KeyVector> SampleQueries(std::span<const KeyVector> keys, std::size_t queries, std::uint64_t seed) {
  std::vector<KeyVector> out;
  for (std::size_t i : SampleQueryIndices(keys.size(), queries, seed)) out.push_back(keys[i]);
  return out;
}

double EvaluatePrompt(const EvalTask& task, const LmProvider& provider, const std::string& hard_prompt_id,
                      std::span<const WeightedId> prompt) {
  const auto records = provider.Classify(hard_prompt_id, task.instance_ids, prompt);
  if (records.size() != task.instance_ids.size()) {
    throw ProviderError("provider returned " + std::to_string(records.size()) + " records for " +
                        std::to_string(task.instance_ids.size()) + " instances");
  }
  for (const auto& r : records) {
    if (r.option_loglikelihoods.size() != task.option_count) {
      throw ProviderError("record '" + r.instance_id + "' has " + std::to_string(r.option_loglikelihoods.size()) +
                          " options, task declares " + std::to_string(task.option_count));
    }
  }
  return ClassificationAccuracy(records);
}

PipelineResult RunPipeline(const EvalTask& task, const MipsIndex& index, const LmProvider& provider,
                           Strategy strategy, const PipelineConfig& config) {
  Stage("task", [&] {
    task.Validate(index.dim());
    return 0;
  });
  PipelineResult result;
  for (const auto& hp : task.hard_prompt_ids) {
    PromptOutcome outcome;
    outcome.hard_prompt_id = hp;
    const auto keys = task.KeysFor(hp);
    outcome.query_indices =
        Stage("sample", [&] { return SampleQueryIndices(keys.size(), config.queries, MixSeed(config.seed, hp)); });
    std::vector<KeyVector> queries;
    for (std::size_t i : outcome.query_indices) queries.push_back(keys[i]);
    const auto hits = Stage("retrieve", [&] { return index.BatchSearch(queries, config.top_n, config.threads); });
    outcome.tally = Stage("aggregate", [&] { return AggregateFrequency(hits); });

    const OptionProbsFn probs = [&](const std::string& id) {
      auto probe = ProbeOptions(provider, id, hp);
      if (probe.option_probs.size() != task.option_count) {
        throw ProviderError("probe of '" + id + "' has " + std::to_string(probe.option_probs.size()) +
                            " options, task declares " + std::to_string(task.option_count));
      }
      return probe.option_probs;
    };
    outcome.selection = Stage("select", [&] {
      auto s = Select(strategy, outcome.tally, config.n_prime, probs);
      AttachPrompt(s, index.library());
      return s;
    });
    outcome.accuracy = Stage("classify", [&] { return EvaluatePrompt(task, provider, hp, outcome.selection.chosen); });
    result.prompts.push_back(std::move(outcome));
  }
  return result;
}

OracleChoice OracleSelection(const EvalTask& task, const LmProvider& provider, const std::string& hard_prompt_id,
                             std::span<const std::string> candidate_ids) {
  if (candidate_ids.empty()) throw ValidationError("oracle selection needs at least one candidate");
  std::vector<std::string> sorted(candidate_ids.begin(), candidate_ids.end());
  std::sort(sorted.begin(), sorted.end());
  std::optional<OracleChoice> best;
  for (const auto& id : sorted) {
    const WeightedId single{id, 1.0};
    const double acc = EvaluatePrompt(task, provider, hard_prompt_id, std::span(&single, 1));
    if (!best || acc > best->accuracy) best = OracleChoice{id, acc};
  }
  return *best;
}

MeanStd AggregateReport(std::span<const double> values) {
  if (values.empty()) throw ValidationError("cannot aggregate zero values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

EvalReport EvaluateTask(const EvalTask& task, const MipsIndex& index, const LmProvider& provider, Strategy strategy,
                        const PipelineConfig& config, std::size_t seed_count, bool with_oracle) {
  if (seed_count == 0) throw ValidationError("seed count must be at least 1");
  EvalReport report;
  report.task_id = task.task_id;
  report.strategy = strategy;
  for (const auto& hp : task.hard_prompt_ids) report.per_prompt.push_back({hp, 0.0, {}, std::nullopt});

  for (std::size_t s = 0; s < seed_count; ++s) {
    PipelineConfig run_config = config;
    run_config.seed = config.seed + s;
    report.seeds.push_back(run_config.seed);
    const auto run = RunPipeline(task, index, provider, strategy, run_config);
    for (std::size_t p = 0; p < run.prompts.size(); ++p) {
      const auto& outcome = run.prompts[p];
      SeedRun seed_run{run_config.seed, outcome.accuracy, outcome.selection.chosen, std::nullopt};
      if (with_oracle) {
        std::vector<std::string> candidates;
        for (const auto& [id, count] : outcome.tally.counts) candidates.push_back(id);
        seed_run.oracle = Stage("oracle", [&] { return OracleSelection(task, provider, outcome.hard_prompt_id, candidates); });
      }
      report.per_prompt[p].runs.push_back(std::move(seed_run));
    }
  }
  for (auto& pr : report.per_prompt) {
    double acc = 0.0;
    double oracle = 0.0;
    for (const auto& r : pr.runs) {
      acc += r.accuracy;
      if (r.oracle) oracle += r.oracle->accuracy;
    }
    pr.accuracy = acc / static_cast<double>(pr.runs.size());
    if (with_oracle) pr.oracle_accuracy = oracle / static_cast<double>(pr.runs.size());
  }
  report.config = {{"strategy", std::string(StrategyName(strategy))},
                   {"pipeline", PipelineConfigToJson(config)},
                   {"seed_count", seed_count},
                   {"metric", index.metric() == Metric::kCosine ? "cosine" : "inner_product"},
                   {"library",
                    {{"entries", index.library().size()},
                     {"embeddings", index.library().embeddings().size()},
                     {"n_per_prompt", index.library().config().n_per_prompt},
                     {"sampling_method", std::string(SamplingMethodName(index.library().config().sampling_method))}}}};
  FinalizeReport(report);
  return report;
}

void FinalizeReport(EvalReport& report) {
  std::vector<double> acc;
  for (const auto& p : report.per_prompt) acc.push_back(p.accuracy);
  const auto ms = AggregateReport(acc);
  report.mean = ms.mean;
  report.std = ms.std;
}

bool ReportIsConsistent(const EvalReport& report, double tol) {
  std::vector<double> acc;
  for (const auto& p : report.per_prompt) acc.push_back(p.accuracy);
  if (acc.empty()) return false;
  const auto ms = AggregateReport(acc);
  return std::abs(ms.mean - report.mean) <= tol && std::abs(ms.std - report.std) <= tol;
}

OrderedJson ReportToJson(const EvalReport& report) {
  OrderedJson j;
  j["version"] = kReportVersion;
  j["task_id"] = report.task_id;
  j["strategy"] = std::string(StrategyName(report.strategy));
  j["mean"] = report.mean;
  j["std"] = report.std;
  j["seeds"] = report.seeds;
  OrderedJson prompts = OrderedJson::array();
  for (const auto& p : report.per_prompt) {
    OrderedJson pj;
    pj["hard_prompt_id"] = p.hard_prompt_id;
    pj["accuracy"] = p.accuracy;
    if (p.oracle_accuracy) pj["oracle_accuracy"] = *p.oracle_accuracy;
    OrderedJson runs = OrderedJson::array();
    for (const auto& r : p.runs) {
      OrderedJson rj{{"seed", r.seed}, {"accuracy", r.accuracy}, {"chosen", ChosenToJson(r.chosen)}};
      if (r.oracle) rj["oracle"] = {{"embedding_id", r.oracle->embedding_id}, {"accuracy", r.oracle->accuracy}};
      runs.push_back(std::move(rj));
    }
    pj["runs"] = std::move(runs);
    prompts.push_back(std::move(pj));
  }
  j["per_prompt"] = std::move(prompts);
  j["config"] = report.config;
  return j;
}

EvalReport ReportFromJson(const Json& j) {
  try {
    EvalReport r;
    r.task_id = j.at("task_id").get<std::string>();
    r.strategy = ParseStrategy(j.at("strategy").get<std::string>());
    r.mean = j.at("mean").get<double>();
    r.std = j.at("std").get<double>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& pj : j.at("per_prompt")) {
      PromptReport p;
      p.hard_prompt_id = pj.at("hard_prompt_id").get<std::string>();
      p.accuracy = pj.at("accuracy").get<double>();
      if (pj.contains("oracle_accuracy")) p.oracle_accuracy = pj.at("oracle_accuracy").get<double>();
      for (const auto& rj : pj.at("runs")) {
        SeedRun run{rj.at("seed").get<std::uint64_t>(), rj.at("accuracy").get<double>(), ChosenFromJson(rj.at("chosen")),
                    std::nullopt};
        if (rj.contains("oracle")) {
          run.oracle = OracleChoice{rj.at("oracle").at("embedding_id").get<std::string>(),
                                    rj.at("oracle").at("accuracy").get<double>()};
        }
        p.runs.push_back(std::move(run));
      }
      r.per_prompt.push_back(std::move(p));
    }
    if (j.contains("config")) r.config = OrderedJson::parse(j.at("config").dump());
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(FormatErrc::kBadField, std::string("malformed report: ") + ex.what());
  }
}

MeanStd MacroAverage(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ValidationError("macro average of zero reports");
  MeanStd out;
  for (const auto& r : reports) {
    out.mean += r.mean;
    out.std += r.std;
  }
  out.mean /= static_cast<double>(reports.size());
  out.std /= static_cast<double>(reports.size());
  return out;
}

// ---- Task files ----

TaskBundle ReadTaskFile(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::parse_error& ex) {
    throw FormatError(FormatErrc::kBadJson, path.string() + ": " + ex.what());
  }
  const auto base_dir = path.parent_path();
  TaskBundle bundle;
  try {
    auto& t = bundle.task;
    t.task_id = j.at("task_id").get<std::string>();
    t.option_count = j.at("option_count").get<std::size_t>();
    t.hard_prompt_ids = j.at("hard_prompt_ids").get<std::vector<std::string>>();
    for (const auto& inst : j.at("instances")) {
      t.instance_ids.push_back(inst.at("instance_id").get<std::string>());
      if (inst.contains("key")) t.keys.push_back(inst.at("key").get<KeyVector>());
    }
    if (j.contains("prompt_keys")) {
      for (const auto& [hp, rows] : j.at("prompt_keys").items()) t.prompt_keys[hp] = KeysFromJson(rows);
    }
    const auto& pj = j.at("provider");
    const std::string kind = pj.at("kind").get<std::string>();
    bundle.provider_json = OrderedJson::parse(pj.dump());
    if (kind == "synthetic") {
      auto cfg = SyntheticConfigFromJson(pj);
      if (cfg.option_count != t.option_count) {
        throw ValidationError("synthetic provider option_count differs from the task's");
      }
      bundle.provider = std::make_unique<SyntheticProvider>(std::move(cfg));
    } else if (kind == "file") {
      auto fp = std::make_unique<FileProvider>();
      if (pj.contains("probes")) {
        for (auto& probe : ReadProbeTable(Resolve(base_dir, pj.at("probes").get<std::string>()))) {
          fp->AddProbe(std::move(probe));
        }
      }
      for (const auto& rj : pj.value("records", Json::array())) {
        fp->AddRecords(rj.at("hard_prompt_id").get<std::string>(), rj.at("prompt_key").get<std::string>(),
                       ReadRecordTable(Resolve(base_dir, rj.at("path").get<std::string>())));
      }
      bundle.provider = std::move(fp);
    } else {
      throw ValidationError("unknown provider kind '" + kind + "' (expected synthetic|file)");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(FormatErrc::kBadField, path.string() + ": malformed task file: " + ex.what());
  }
  return bundle;
}

void WriteTaskFile(const std::filesystem::path& path, const EvalTask& task, const OrderedJson& provider_json) {
  OrderedJson j;
  j["version"] = kReportVersion;
  j["task_id"] = task.task_id;
  j["option_count"] = task.option_count;
  j["hard_prompt_ids"] = task.hard_prompt_ids;
  OrderedJson instances = OrderedJson::array();
  for (std::size_t i = 0; i < task.instance_ids.size(); ++i) {
    OrderedJson inst{{"instance_id", task.instance_ids[i]}};
    if (i < task.keys.size()) inst["key"] = task.keys[i];
    instances.push_back(std::move(inst));
  }
  j["instances"] = std::move(instances);
  if (!task.prompt_keys.empty()) j["prompt_keys"] = task.prompt_keys;
  j["provider"] = provider_json;
  WriteTextFile(path, j.dump() + "\n");
}

// ---- Retrieval fixtures ----

RetrievalFixture ReadRetrievalFixture(const std::filesystem::path& path) {
  try {
    const Json j = Json::parse(ReadTextFile(path));
    RetrievalFixture f;
    f.dataset = j.at("dataset").get<std::string>();
    for (const auto& row : j.at("rows")) {
      f.rows.push_back({row.at("prompt_name").get<std::string>(), row.at("baseline").get<double>(),
                        row.at("retrieved_accuracy").get<double>(), row.at("retrieved_embedding").get<std::string>(),
                        row.at("oracle_accuracy").get<double>(), row.at("oracle_embedding").get<std::string>()});
    }
    const auto& avg = j.at("reported_avg");
    f.reported_baseline_avg = avg.at("baseline").get<double>();
    f.reported_retrieved_avg = avg.at("retrieved").get<double>();
    f.reported_oracle_avg = avg.at("oracle").get<double>();
    return f;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(FormatErrc::kBadField, path.string() + ": malformed retrieval fixture: " + ex.what());
  }
}

FixtureReplay ReplayRetrievalFixture(const RetrievalFixture& fixture) {
  if (fixture.rows.empty()) throw ValidationError("fixture has no rows");
  auto make = [&](Strategy strategy, auto accuracy_of, auto embedding_of) {
    EvalReport r;
    r.task_id = fixture.dataset;
    r.strategy = strategy;
    r.seeds = {0};
    for (const auto& row : fixture.rows) {
      PromptReport p;
      p.hard_prompt_id = row.prompt_name;
      p.accuracy = accuracy_of(row);
      std::vector<WeightedId> chosen;
      if (std::string id = embedding_of(row); !id.empty()) chosen.push_back({id, 1.0});
      p.runs.push_back({0, p.accuracy, std::move(chosen), std::nullopt});
      r.per_prompt.push_back(std::move(p));
    }
    r.config = {{"source", "fixture"}, {"dataset", fixture.dataset}};
    FinalizeReport(r);
    return r;
  };
  FixtureReplay replay;
  replay.baseline = make(
      Strategy::kFrequency, [](const FixtureRow& r) { return r.baseline; }, [](const FixtureRow&) { return std::string(); });
  replay.retrieved = make(
      Strategy::kFrequency, [](const FixtureRow& r) { return r.retrieved_accuracy; },
      [](const FixtureRow& r) { return r.retrieved_embedding; });
  replay.oracle = make(
      Strategy::kFrequency, [](const FixtureRow& r) { return r.oracle_accuracy; },
      [](const FixtureRow& r) { return r.oracle_embedding; });
  for (std::size_t i = 0; i < fixture.rows.size(); ++i) {
    replay.oracle.per_prompt[i].oracle_accuracy = fixture.rows[i].oracle_accuracy;
    replay.retrieved.per_prompt[i].oracle_accuracy = fixture.rows[i].oracle_accuracy;
  }
  return replay;
}

ResultsTable ReadResultsTable(const std::filesystem::path& path) {
  try {
    const Json j = Json::parse(ReadTextFile(path));
    ResultsTable t;
    t.datasets = j.at("datasets").get<std::vector<std::string>>();
    for (const auto& [method, row] : j.at("rows").items()) {
      t.rows[method] = row.at("values").get<std::vector<double>>();
      if (t.rows[method].size() != t.datasets.size()) {
        throw ValidationError("row '" + method + "' has " + std::to_string(t.rows[method].size()) + " values for " +
                              std::to_string(t.datasets.size()) + " datasets");
      }
      t.reported_mean[method] = row.at("mean").get<double>();
    }
    return t;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(FormatErrc::kBadField, path.string() + ": malformed results table: " + ex.what());
  }
}

}  // namespace sprl
