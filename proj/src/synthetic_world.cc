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

#include "sprl/synthetic_world.h"

#include <cmath>
#include <cstdio>

#include "sprl/error.h"
#include "sprl/rng.h"

namespace sprl {

namespace {

std::string Padded(const char* prefix, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%03zu", prefix, i);
  return buf;
}

KeyVector Jitter(const std::vector<double>& center, double sigma, Rng& rng) {
  KeyVector k(center.size());
  for (std::size_t d = 0; d < center.size(); ++d) k[d] = static_cast<float>(center[d] + sigma * rng.Normal());
  return k;
}

}  // namespace

std::string WorldEmbeddingId(const WorldConfig& config, std::size_t i) {
  const std::size_t per = config.prompts_per_dataset == 0 ? 1 : config.prompts_per_dataset;
  return Padded("ds", i / per) + "/" + Padded("prompt", i);
}

OrderedJson WorldConfigToJson(const WorldConfig& c) {
  return OrderedJson{{"seed", c.seed},
                     {"num_embeddings", c.num_embeddings},
                     {"prompts_per_dataset", c.prompts_per_dataset},
                     {"key_dim", c.key_dim},
                     {"prefix_len", c.prefix_len},
                     {"model_dim", c.model_dim},
                     {"instances_per_embedding", c.instances_per_embedding},
                     {"separation", c.separation},
                     {"sigma", c.sigma},
                     {"distractor_rate", c.distractor_rate},
                     {"task_instances", c.task_instances},
                     {"hard_prompts", c.hard_prompts},
                     {"option_count", c.option_count},
                     {"planted_affinity", c.planted_affinity},
                     {"other_affinity_min", c.other_affinity_min},
                     {"other_affinity_max", c.other_affinity_max},
                     {"planted_calibration", c.planted_calibration},
                     {"other_calibration_min", c.other_calibration_min},
                     {"other_calibration_max", c.other_calibration_max},
                     {"prompt_jitter", c.prompt_jitter}};
}

WorldConfig WorldConfigFromJson(const Json& j, WorldConfig c) {
  if (!j.is_object()) throw ValidationError("world config must be a JSON object");
  const Json known = Json::parse(WorldConfigToJson(c).dump());
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("unknown world config field '" + key + "'");
  }
  try {
    c.seed = j.value("seed", c.seed);
    c.num_embeddings = j.value("num_embeddings", c.num_embeddings);
    c.prompts_per_dataset = j.value("prompts_per_dataset", c.prompts_per_dataset);
    c.key_dim = j.value("key_dim", c.key_dim);
    c.prefix_len = j.value("prefix_len", c.prefix_len);
    c.model_dim = j.value("model_dim", c.model_dim);
    c.instances_per_embedding = j.value("instances_per_embedding", c.instances_per_embedding);
    c.separation = j.value("separation", c.separation);
    c.sigma = j.value("sigma", c.sigma);
    c.distractor_rate = j.value("distractor_rate", c.distractor_rate);
    c.task_instances = j.value("task_instances", c.task_instances);
    c.hard_prompts = j.value("hard_prompts", c.hard_prompts);
    c.option_count = j.value("option_count", c.option_count);
    c.planted_affinity = j.value("planted_affinity", c.planted_affinity);
    c.other_affinity_min = j.value("other_affinity_min", c.other_affinity_min);
    c.other_affinity_max = j.value("other_affinity_max", c.other_affinity_max);
    c.planted_calibration = j.value("planted_calibration", c.planted_calibration);
    c.other_calibration_min = j.value("other_calibration_min", c.other_calibration_min);
    c.other_calibration_max = j.value("other_calibration_max", c.other_calibration_max);
    c.prompt_jitter = j.value("prompt_jitter", c.prompt_jitter);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed world config: ") + ex.what());
  }
  return c;
}

SyntheticWorld GenerateWorld(const WorldConfig& config) {
  if (config.num_embeddings < 2) throw ValidationError("a world needs at least two embeddings");
  if (config.key_dim == 0 || config.instances_per_embedding == 0 || config.task_instances == 0 ||
      config.hard_prompts == 0) {
    throw ValidationError("world dimensions and counts must be positive");
  }
  if (config.distractor_rate < 0.0 || config.distractor_rate > 1.0) {
    throw ValidationError("distractor_rate must lie in [0, 1]");
  }

  SyntheticWorld world;
  world.config = config;
  Rng rng(MixSeed(config.seed, "world"));

  // Cluster centers with pairwise distance separation * sigma: scaled basis
  // vectors when the key space is wide enough, random directions otherwise.
  const double radius = config.separation * config.sigma / std::sqrt(2.0);
  std::vector<std::vector<double>> centers(config.num_embeddings, std::vector<double>(config.key_dim, 0.0));
  for (std::size_t i = 0; i < config.num_embeddings; ++i) {
    if (config.key_dim >= config.num_embeddings) {
      centers[i][i] = radius;
    } else {
      double norm = 0.0;
      for (auto& v : centers[i]) {
        v = rng.Normal();
        norm += v * v;
      }
      for (auto& v : centers[i]) v *= radius / std::sqrt(norm);
    }
  }

  const std::size_t planted = static_cast<std::size_t>(rng.UniformIndex(config.num_embeddings));
  world.provider.seed = MixSeed(config.seed, "provider");
  world.provider.option_count = config.option_count;

  for (std::size_t i = 0; i < config.num_embeddings; ++i) {
    PromptEmbedding e;
    e.id = WorldEmbeddingId(config, i);
    const std::size_t per = config.prompts_per_dataset == 0 ? 1 : config.prompts_per_dataset;
    e.metadata = {Padded("ds", i / per), Padded("prompt", i), Padded("cluster", (i / per) % 3),
                  i % 2 == 0 ? "yes/no" : "positive/negative"};
    std::vector<float> values(static_cast<std::size_t>(config.prefix_len) * config.model_dim);
    for (auto& v : values) v = static_cast<float>(0.5 * rng.Normal());
    e.matrix = PromptMatrix(config.prefix_len, config.model_dim, std::move(values));

    auto& keys = world.instances[e.id];
    for (std::size_t k = 0; k < config.instances_per_embedding; ++k) keys.push_back(Jitter(centers[i], config.sigma, rng));

    if (i == planted) {
      world.planted_id = e.id;
      world.provider.affinity[e.id] = config.planted_affinity;
      world.provider.calibration[e.id] = config.planted_calibration;
    } else {
      world.provider.affinity[e.id] =
          config.other_affinity_min + (config.other_affinity_max - config.other_affinity_min) * rng.Uniform01();
      world.provider.calibration[e.id] =
          config.other_calibration_min + (config.other_calibration_max - config.other_calibration_min) * rng.Uniform01();
    }
    world.embeddings.push_back(std::move(e));
  }

  auto& task = world.task;
  task.task_id = "synthetic-" + std::to_string(config.seed);
  task.option_count = config.option_count;
  std::vector<std::size_t> source_cluster(config.task_instances);
  for (std::size_t j = 0; j < config.task_instances; ++j) {
    task.instance_ids.push_back(Padded("inst", j));
    std::size_t cluster = planted;
    if (rng.Uniform01() < config.distractor_rate) {
      cluster = static_cast<std::size_t>(rng.UniformIndex(config.num_embeddings - 1));
      if (cluster >= planted) ++cluster;
    }
    source_cluster[j] = cluster;
  }
  for (std::size_t h = 0; h < config.hard_prompts; ++h) {
    const std::string hp = Padded("hp", h);
    task.hard_prompt_ids.push_back(hp);
    world.provider.prompt_offsets[hp] = config.prompt_jitter * (2.0 * rng.Uniform01() - 1.0);
    auto& keys = task.prompt_keys[hp];
    for (std::size_t j = 0; j < config.task_instances; ++j) keys.push_back(Jitter(centers[source_cluster[j]], config.sigma, rng));
  }
  // Shared keys mirror the first hard prompt.
  task.keys = task.prompt_keys.at(task.hard_prompt_ids.front());
  return world;
}

}  // namespace sprl
