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

#include <gtest/gtest.h>

#include <set>

#include "sprl/error.h"

namespace sprl {
namespace {

AblationBase SmallBase() {
  AblationBase b;
  b.world.instances_per_embedding = 40;
  b.world.task_instances = 32;
  b.world.hard_prompts = 2;
  b.seeds = 2;
  b.n_per_prompt = 20;
  b.pipeline.queries = 8;
  return b;
}

TEST(AblationTest, UnknownAxisAndBadValuesAreRejected) {
  auto base = SmallBase();
  EXPECT_THROW(ApplyAxis(base, "temperature", 1), ValidationError);
  EXPECT_THROW(ApplyAxis(base, "Q", 0), ValidationError);
  EXPECT_THROW(ApplyAxis(base, "Q", "many"), ValidationError);
  EXPECT_THROW(ApplyAxis(base, "sampling_method", 3), ValidationError);
  EXPECT_THROW(RunAblation(OrderedJson::parse(R"({"temperature": [1, 2]})"), base), ValidationError);
  EXPECT_THROW(RunAblation(OrderedJson::parse(R"({"Q": []})"), base), ValidationError);
  EXPECT_THROW(RunAblation(OrderedJson::parse("[1]"), base), ValidationError);
  ApplyAxis(base, "sampling_method", "clustering");
  EXPECT_EQ(base.sampling_method, SamplingMethod::kClustering);
}

TEST(AblationTest, EmptyGridIsTheBaseAlone) {
  const auto base = SmallBase();
  const auto cells = RunAblation(OrderedJson::object(), base);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_TRUE(cells[0].axis_values.empty());
  EXPECT_EQ(cells[0].report.seeds.size(), 2u);
  EXPECT_TRUE(ReportIsConsistent(cells[0].report));
}

TEST(AblationTest, CartesianProductInGridOrder) {
  auto base = SmallBase();
  base.strategy = Strategy::kInterpolation;
  const auto cells = RunAblation(OrderedJson::parse(R"({"n_prime": [1, 3], "N": [2, 5, 10]})"), base);
  ASSERT_EQ(cells.size(), 6u);
  const int n_prime[] = {1, 1, 1, 3, 3, 3};
  const int top_n[] = {2, 5, 10, 2, 5, 10};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(cells[i].axis_values[0].first, "n_prime");
    EXPECT_EQ(cells[i].axis_values[0].second, n_prime[i]);
    EXPECT_EQ(cells[i].axis_values[1].second, top_n[i]);
    for (const auto& p : cells[i].report.per_prompt) {
      for (const auto& r : p.runs) EXPECT_LE(r.chosen.size(), static_cast<std::size_t>(n_prime[i]));
    }
  }
  // n_prime = 1 reduces interpolation to a single weight-1 choice.
  for (const auto& r : cells[0].report.per_prompt[0].runs) {
    ASSERT_EQ(r.chosen.size(), 1u);
    EXPECT_EQ(r.chosen[0].weight, 1.0);
  }
  const auto csv = AblationTableCsv(cells);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n_prime,N,strategy,seeds,mean,std,planted_hit_rate,oracle_mean");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(AblationTest, LibraryRestrictions) {
  auto base = SmallBase();
  const auto world = GenerateWorld(base.world);
  base.prompts_count = 3;
  auto lib = BuildAblationLibrary(world, base);
  EXPECT_EQ(lib.embeddings().size(), 3u);
  EXPECT_EQ(lib.size(), 60u);

  base.prompts_count.reset();
  base.datasets_count = 2;
  lib = BuildAblationLibrary(world, base);
  std::set<std::string> datasets;
  for (const auto& e : lib.embeddings()) datasets.insert(e.metadata.source_dataset);
  EXPECT_EQ(datasets.size(), 2u);
  EXPECT_EQ(lib.embeddings().size(), 2 * base.world.prompts_per_dataset);
  EXPECT_EQ(BuildAblationLibrary(world, base), lib);
}

TEST(AblationTest, BaseJsonRoundTrip) {
  auto base = SmallBase();
  base.strategy = Strategy::kVariance;
  base.datasets_count = 4;
  base.with_oracle = true;
  const auto back = AblationBaseFromJson(Json::parse(AblationBaseToJson(base).dump()));
  EXPECT_EQ(back.strategy, base.strategy);
  EXPECT_EQ(back.datasets_count, base.datasets_count);
  EXPECT_EQ(back.prompts_count, base.prompts_count);
  EXPECT_EQ(back.pipeline.queries, base.pipeline.queries);
  EXPECT_EQ(back.world.instances_per_embedding, base.world.instances_per_embedding);
  EXPECT_TRUE(back.with_oracle);
}

}  // namespace
}  // namespace sprl
