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
#include <string>
#include <vector>

#include "sprl/eval_harness.h"
#include "sprl/jsonl.h"
#include "sprl/lm_oracle.h"
#include "sprl/prompt_library.h"

namespace sprl {

// Generator for a "planted-optimum" world: one Gaussian key cluster per
// source embedding, a target task whose instances mostly come from the
// planted embedding's cluster, and a synthetic LM under which the planted
// embedding is the most accurate and the best calibrated.
struct WorldConfig {
  std::uint64_t seed = 0;
  std::size_t num_embeddings = 10;
  // Embeddings are grouped into source datasets of this many prompts.
  std::size_t prompts_per_dataset = 2;
  std::uint32_t key_dim = 16;
  std::uint32_t prefix_len = 4;
  std::uint32_t model_dim = 8;
  std::size_t instances_per_embedding = 150;
  // Distance between cluster centers, in units of sigma.
  double separation = 4.0;
  double sigma = 1.0;
  // Fraction of task instances drawn from a random non-planted cluster.
  double distractor_rate = 0.45;
  std::size_t task_instances = 64;
  std::size_t hard_prompts = 4;
  std::size_t option_count = 2;
  double planted_affinity = 0.85;
  double other_affinity_min = 0.35;
  double other_affinity_max = 0.65;
  double planted_calibration = 0.9;
  double other_calibration_min = 0.1;
  double other_calibration_max = 0.6;
  // Per-hard-prompt affinity shift is uniform in [-prompt_jitter, prompt_jitter].
  double prompt_jitter = 0.05;
};

OrderedJson WorldConfigToJson(const WorldConfig& config);
// Missing fields keep their defaults.
WorldConfig WorldConfigFromJson(const Json& j, WorldConfig base = {});

struct SyntheticWorld {
  WorldConfig config;
  std::vector<PromptEmbedding> embeddings;
  KeyedInstances instances;
  std::string planted_id;
  EvalTask task;
  SyntheticProviderConfig provider;
};

SyntheticWorld GenerateWorld(const WorldConfig& config);

// Id of the i-th embedding: "ds<i / prompts_per_dataset>/prompt<i>".
std::string WorldEmbeddingId(const WorldConfig& config, std::size_t i);

}  // namespace sprl
