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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sprl/jsonl.h"
#include "sprl/lm_oracle.h"
#include "sprl/mips_index.h"
#include "sprl/selection.h"

namespace sprl {

inline constexpr std::size_t kDefaultQueryCount = 32;
inline constexpr std::size_t kDefaultSeedCount = 3;
inline constexpr int kReportVersion = 1;

// A target task: evaluation instances, their retrieval keys, and the hard
// prompts it is evaluated under.
struct EvalTask {
  std::string task_id;
  std::size_t option_count = 2;
  std::vector<std::string> hard_prompt_ids;
  std::vector<std::string> instance_ids;
  // One key per instance, shared by all hard prompts...
  std::vector<KeyVector> keys;
  // ...unless a hard prompt carries its own prompted keys.
  std::map<std::string, std::vector<KeyVector>> prompt_keys;

  std::span<const KeyVector> KeysFor(const std::string& hard_prompt_id) const;
  // Throws ValidationError when a key dimension differs from key_dim or a
  // hard prompt has no instances.
  void Validate(std::uint32_t key_dim) const;
};

struct PipelineConfig {
  std::size_t queries = kDefaultQueryCount;
  std::size_t top_n = kDefaultTopN;
  std::size_t n_prime = kDefaultInterpolationCandidates;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

OrderedJson PipelineConfigToJson(const PipelineConfig& config);

struct PromptOutcome {
  std::string hard_prompt_id;
  std::vector<std::size_t> query_indices;
  CandidateTally tally;
  SelectionResult selection;
  double accuracy = 0.0;
};

struct PipelineResult {
  std::vector<PromptOutcome> prompts;
};

// min(Q, count) distinct instance indices, uniform, seed-deterministic.
std::vector<std::size_t> SampleQueryIndices(std::size_t instance_count, std::size_t queries, std::uint64_t seed);
std::vector<KeyVector> SampleQueries(std::span<const KeyVector> keys, std::size_t queries, std::uint64_t seed);

// Accuracy of one (possibly blended) soft prompt under a hard prompt, by rank
// classification over every task instance.
double EvaluatePrompt(const EvalTask& task, const LmProvider& provider, const std::string& hard_prompt_id,
                      std::span<const WeightedId> prompt);

// Query sampling -> MIPS retrieval -> selection -> classification, per hard
// prompt. Errors are rethrown with a "[stage]" prefix.
PipelineResult RunPipeline(const EvalTask& task, const MipsIndex& index, const LmProvider& provider,
                           Strategy strategy, const PipelineConfig& config);

struct OracleChoice {
  std::string embedding_id;
  double accuracy = 0.0;
};

// Evaluates every candidate alone and keeps the best (ties: smallest id).
OracleChoice OracleSelection(const EvalTask& task, const LmProvider& provider, const std::string& hard_prompt_id,
                             std::span<const std::string> candidate_ids);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Arithmetic mean and population standard deviation.
MeanStd AggregateReport(std::span<const double> values);

struct SeedRun {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::vector<WeightedId> chosen;
  std::optional<OracleChoice> oracle;
};

struct PromptReport {
  std::string hard_prompt_id;
  // Seed-averaged accuracy.
  double accuracy = 0.0;
  std::vector<SeedRun> runs;
  std::optional<double> oracle_accuracy;
};

struct EvalReport {
  std::string task_id;
  Strategy strategy = Strategy::kFrequency;
  std::vector<PromptReport> per_prompt;
  double mean = 0.0;
  double std = 0.0;
  std::vector<std::uint64_t> seeds;
  OrderedJson config;
};

// Runs the pipeline for seeds config.seed .. config.seed + seed_count - 1 and
// averages per prompt. With `with_oracle`, each run also records the oracle
// over that run's retrieved candidates.
EvalReport EvaluateTask(const EvalTask& task, const MipsIndex& index, const LmProvider& provider, Strategy strategy,
                        const PipelineConfig& config, std::size_t seed_count = kDefaultSeedCount,
                        bool with_oracle = false);

// Recomputes mean/std from per_prompt into the report.
void FinalizeReport(EvalReport& report);
// True when mean/std match a recomputation from per_prompt within tol.
bool ReportIsConsistent(const EvalReport& report, double tol = 1e-9);

OrderedJson ReportToJson(const EvalReport& report);
EvalReport ReportFromJson(const Json& j);

// Macro summary over several tasks: mean of per-task means and mean of
// per-task population stds.
MeanStd MacroAverage(std::span<const EvalReport> reports);

// ---- Task files ----

struct TaskBundle {
  EvalTask task;
  std::unique_ptr<LmProvider> provider;
  OrderedJson provider_json;
};

// JSON task file: {"version", "task_id", "option_count", "hard_prompt_ids",
// "instances": [{"instance_id", "key"}], "prompt_keys"?: {hp: [[...]]},
// "provider": {"kind": "synthetic", ...} | {"kind": "file", "probes": path,
// "records": [{"hard_prompt_id", "prompt_key", "path"}]}}.
// Relative paths resolve against the task file's directory.
TaskBundle ReadTaskFile(const std::filesystem::path& path);
void WriteTaskFile(const std::filesystem::path& path, const EvalTask& task, const OrderedJson& provider_json);

// ---- Retrieval fixtures ----

// One evaluation prompt of a transcribed per-prompt retrieval table.
struct FixtureRow {
  std::string prompt_name;
  double baseline = 0.0;
  double retrieved_accuracy = 0.0;
  std::string retrieved_embedding;
  double oracle_accuracy = 0.0;
  std::string oracle_embedding;
};

struct RetrievalFixture {
  std::string dataset;
  std::vector<FixtureRow> rows;
  double reported_baseline_avg = 0.0;
  double reported_retrieved_avg = 0.0;
  double reported_oracle_avg = 0.0;
};

RetrievalFixture ReadRetrievalFixture(const std::filesystem::path& path);

struct FixtureReplay {
  EvalReport baseline;
  EvalReport retrieved;
  EvalReport oracle;
};

// Rebuilds reports (accuracies in the fixture's units) from a fixture. The
// retrieved report's chosen ids reproduce the fixture column verbatim.
FixtureReplay ReplayRetrievalFixture(const RetrievalFixture& fixture);

// A transcribed results table: method -> per-dataset values plus reported mean.
struct ResultsTable {
  std::vector<std::string> datasets;
  std::map<std::string, std::vector<double>> rows;
  std::map<std::string, double> reported_mean;
};

ResultsTable ReadResultsTable(const std::filesystem::path& path);

}  // namespace sprl
