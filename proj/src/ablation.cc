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

#include "sprl/ablation.h"

#include <algorithm>
#include <memory>
#include <set>

#include "sprl/error.h"
#include "sprl/mips_index.h"
#include "sprl/rng.h"

namespace sprl {

namespace {

std::size_t PositiveCount(const Json& value, const std::string& axis) {
  if (!value.is_number_unsigned() || value.get<std::size_t>() == 0) {
    throw ValidationError("axis '" + axis + "' needs positive integers, got " + value.dump());
  }
  return value.get<std::size_t>();
}

// Deterministic shuffle keyed by (seed, salt).
template <typename T>
void Shuffle(std::vector<T>& items, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[static_cast<std::size_t>(rng.UniformIndex(i))]);
  }
}

std::string CsvField(const OrderedJson& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

OrderedJson AblationBaseToJson(const AblationBase& b) {
  OrderedJson j;
  j["world"] = WorldConfigToJson(b.world);
  j["strategy"] = std::string(StrategyName(b.strategy));
  j["queries"] = b.pipeline.queries;
  j["top_n"] = b.pipeline.top_n;
  j["n_prime"] = b.pipeline.n_prime;
  j["seed"] = b.pipeline.seed;
  j["seeds"] = b.seeds;
  j["n_per_prompt"] = b.n_per_prompt;
  j["sampling_method"] = std::string(SamplingMethodName(b.sampling_method));
  j["prompts_count"] = b.prompts_count ? OrderedJson(*b.prompts_count) : OrderedJson(nullptr);
  j["datasets_count"] = b.datasets_count ? OrderedJson(*b.datasets_count) : OrderedJson(nullptr);
  j["with_oracle"] = b.with_oracle;
  return j;
}

AblationBase AblationBaseFromJson(const Json& j) {
  if (!j.is_object()) throw ValidationError("ablation base must be a JSON object");
  AblationBase b;
  try {
    if (j.contains("world")) b.world = WorldConfigFromJson(j.at("world"));
    if (j.contains("strategy")) b.strategy = ParseStrategy(j.at("strategy").get<std::string>());
    b.pipeline.queries = j.value("queries", b.pipeline.queries);
    b.pipeline.top_n = j.value("top_n", b.pipeline.top_n);
    b.pipeline.n_prime = j.value("n_prime", b.pipeline.n_prime);
    b.pipeline.seed = j.value("seed", b.pipeline.seed);
    b.seeds = j.value("seeds", b.seeds);
    b.n_per_prompt = j.value("n_per_prompt", b.n_per_prompt);
    if (j.contains("sampling_method")) b.sampling_method = ParseSamplingMethod(j.at("sampling_method").get<std::string>());
    if (j.contains("prompts_count") && !j.at("prompts_count").is_null()) {
      b.prompts_count = PositiveCount(j.at("prompts_count"), "prompts_count");
    }
    if (j.contains("datasets_count") && !j.at("datasets_count").is_null()) {
      b.datasets_count = PositiveCount(j.at("datasets_count"), "datasets_count");
    }
    b.with_oracle = j.value("with_oracle", b.with_oracle);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed ablation base: ") + ex.what());
  }
  return b;
}

void ApplyAxis(AblationBase& base, const std::string& axis, const Json& value) {
  if (axis == "Q") {
    base.pipeline.queries = PositiveCount(value, axis);
  } else if (axis == "N") {
    base.pipeline.top_n = PositiveCount(value, axis);
  } else if (axis == "n_prime") {
    base.pipeline.n_prime = PositiveCount(value, axis);
  } else if (axis == "n_per_prompt") {
    base.n_per_prompt = PositiveCount(value, axis);
  } else if (axis == "sampling_method") {
    if (!value.is_string()) throw ValidationError("axis 'sampling_method' needs strings, got " + value.dump());
    base.sampling_method = ParseSamplingMethod(value.get<std::string>());
  } else if (axis == "prompts_count") {
    base.prompts_count = PositiveCount(value, axis);
  } else if (axis == "datasets_count") {
    base.datasets_count = PositiveCount(value, axis);
  } else {
    throw ValidationError("unknown ablation axis '" + axis +
                          "' (expected Q, N, n_prime, n_per_prompt, sampling_method, prompts_count, datasets_count)");
  }
}

SourcePromptLibrary BuildAblationLibrary(const SyntheticWorld& world, const AblationBase& base) {
  std::vector<PromptEmbedding> kept = world.embeddings;
  if (base.datasets_count) {
    std::set<std::string> all;
    for (const auto& e : kept) all.insert(e.metadata.source_dataset);
    std::vector<std::string> datasets(all.begin(), all.end());
    Shuffle(datasets, MixSeed(world.config.seed, "datasets"));
    datasets.resize(std::min(*base.datasets_count, datasets.size()));
    std::set<std::string> keep(datasets.begin(), datasets.end());
    std::erase_if(kept, [&](const PromptEmbedding& e) { return !keep.contains(e.metadata.source_dataset); });
  }
  if (base.prompts_count && *base.prompts_count < kept.size()) {
    Shuffle(kept, MixSeed(world.config.seed, "prompts"));
    kept.resize(*base.prompts_count);
  }
  KeyedInstances instances;
  for (const auto& e : kept) instances[e.id] = world.instances.at(e.id);
  return BuildLibrary(std::move(kept), instances, base.n_per_prompt, base.sampling_method, base.pipeline.seed);
}

std::vector<AblationCell> RunAblation(const OrderedJson& grid, const AblationBase& base) {
  if (!grid.is_object()) throw ValidationError("ablation grid must be a JSON object of axis -> values");
  std::vector<std::pair<std::string, std::vector<OrderedJson>>> axes;
  for (const auto& [axis, values] : grid.items()) {
    if (!values.is_array() || values.empty()) throw ValidationError("axis '" + axis + "' needs a non-empty array");
    AblationBase probe = base;
    for (const auto& v : values) ApplyAxis(probe, axis, Json::parse(v.dump()));
    axes.emplace_back(axis, std::vector<OrderedJson>(values.begin(), values.end()));
  }

  const SyntheticWorld world = GenerateWorld(base.world);
  const SyntheticProvider provider(world.provider);

  std::vector<AblationCell> cells;
  std::vector<std::size_t> cursor(axes.size(), 0);
  while (true) {
    AblationCell cell;
    AblationBase cfg = base;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto& value = axes[a].second[cursor[a]];
      ApplyAxis(cfg, axes[a].first, Json::parse(value.dump()));
      cell.axis_values.emplace_back(axes[a].first, value);
    }
    auto library = std::make_shared<const SourcePromptLibrary>(BuildAblationLibrary(world, cfg));
    const MipsIndex index(library);
    cell.report = EvaluateTask(world.task, index, provider, cfg.strategy, cfg.pipeline, cfg.seeds, cfg.with_oracle);
    std::size_t hits = 0;
    std::size_t runs = 0;
    for (const auto& p : cell.report.per_prompt) {
      for (const auto& r : p.runs) {
        ++runs;
        if (!r.chosen.empty() && r.chosen.front().id == world.planted_id) ++hits;
      }
    }
    cell.planted_hit_rate = runs ? static_cast<double>(hits) / static_cast<double>(runs) : 0.0;
    cell.report.config["ablation"] = AblationBaseToJson(cfg);
    cells.push_back(std::move(cell));

    // Odometer increment, last axis fastest.
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++cursor[a] < axes[a].second.size()) break;
      cursor[a] = 0;
      if (a == 0) return cells;
    }
    if (axes.empty()) return cells;
  }
}

std::string AblationTableCsv(const std::vector<AblationCell>& cells) {
  std::string out;
  if (cells.empty()) return out;
  for (const auto& [axis, v] : cells.front().axis_values) out += axis + ",";
  out += "strategy,seeds,mean,std,planted_hit_rate,oracle_mean\n";
  for (const auto& cell : cells) {
    for (const auto& [axis, v] : cell.axis_values) out += CsvField(v) + ",";
    out += std::string(StrategyName(cell.report.strategy)) + ",";
    out += std::to_string(cell.report.seeds.size()) + ",";
    out += FormatDouble(cell.report.mean) + "," + FormatDouble(cell.report.std) + ",";
    out += FormatDouble(cell.planted_hit_rate) + ",";
    std::vector<double> oracle;
    for (const auto& p : cell.report.per_prompt) {
      if (p.oracle_accuracy) oracle.push_back(*p.oracle_accuracy);
    }
    if (oracle.size() == cell.report.per_prompt.size() && !oracle.empty()) out += FormatDouble(AggregateReport(oracle).mean);
    out += "\n";
  }
  return out;
}

}  // namespace sprl
