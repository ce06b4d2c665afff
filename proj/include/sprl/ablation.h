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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sprl/eval_harness.h"
#include "sprl/jsonl.h"
#include "sprl/synthetic_world.h"

namespace sprl {

// Axes accepted in an ablation grid.
inline constexpr const char* kAblationAxes[] = {"Q",           "N",                  "n_prime",      "n_per_prompt",
                                                "sampling_method", "prompts_count", "datasets_count"};

struct AblationBase {
  WorldConfig world;
  Strategy strategy = Strategy::kFrequency;
  PipelineConfig pipeline;
  std::size_t seeds = kDefaultSeedCount;
  std::size_t n_per_prompt = kDefaultSamplesPerPrompt;
  SamplingMethod sampling_method = SamplingMethod::kRandom;
  // Restrict the library to this many prompts / source datasets.
  std::optional<std::size_t> prompts_count;
  std::optional<std::size_t> datasets_count;
  bool with_oracle = false;
};

OrderedJson AblationBaseToJson(const AblationBase& base);
AblationBase AblationBaseFromJson(const Json& j);

struct AblationCell {
  // (axis, value) pairs in grid order.
  std::vector<std::pair<std::string, OrderedJson>> axis_values;
  EvalReport report;
  // Fraction of (hard prompt, seed) runs whose top-weighted embedding is the planted one.
  double planted_hit_rate = 0.0;
};

// Applies one axis value to a base config. Throws ValidationError for an
// unknown axis or an ill-typed value.
void ApplyAxis(AblationBase& base, const std::string& axis, const Json& value);

// Library for a configured world, honoring n_per_prompt, sampling method and
// the prompt / dataset restrictions.
SourcePromptLibrary BuildAblationLibrary(const SyntheticWorld& world, const AblationBase& base);

// One report per cell of the Cartesian product of `grid` (first axis varies
// slowest). An empty grid yields the base configuration alone.
std::vector<AblationCell> RunAblation(const OrderedJson& grid, const AblationBase& base);

std::string AblationTableCsv(const std::vector<AblationCell>& cells);

}  // namespace sprl
