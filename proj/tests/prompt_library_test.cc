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

#include "sprl/prompt_library.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "sprl/error.h"
#include "sprl/rng.h"
#include "test_util.h"

namespace sprl {
namespace {

using testing::MakeEmbedding;
using testing::RandomKeys;

// Independent oracle: rank of key i = number of keys strictly closer to the
// centroid, plus equally close keys with a smaller index. Keys are
// integer-valued, so m^2 times the squared distance is an exact integer.
std::vector<std::size_t> RankOracle(const std::vector<KeyVector>& keys) {
  const std::size_t dim = keys.front().size();
  const auto m = static_cast<std::int64_t>(keys.size());
  std::vector<std::int64_t> sq(keys.size(), 0);
  for (std::size_t d = 0; d < dim; ++d) {
    std::int64_t sum = 0;
    for (const auto& k : keys) sum += static_cast<std::int64_t>(k[d]);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const std::int64_t diff = m * static_cast<std::int64_t>(keys[i][d]) - sum;
      sq[i] += diff * diff;
    }
  }
  std::vector<std::size_t> rank(keys.size(), 0);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t j = 0; j < keys.size(); ++j) {
      if (sq[j] < sq[i] || (sq[j] == sq[i] && j < i)) ++rank[i];
    }
  }
  return rank;
}

std::vector<std::size_t> OracleByRank(const std::vector<std::size_t>& rank, std::size_t n) {
  std::vector<std::size_t> out(std::min(n, rank.size()));
  for (std::size_t i = 0; i < rank.size(); ++i) {
    if (rank[i] < out.size()) out[rank[i]] = i;
  }
  return out;
}

TEST(SampleRandomTest, ExhaustiveAndClamp) {
  auto all = SampleRandom(5, 5, 11);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4}));

  auto clamped = SampleRandom(3, 100, 11);
  std::sort(clamped.begin(), clamped.end());
  EXPECT_EQ(clamped, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(SampleRandomTest, DeterministicDistinctAndPrefixStable) {
  const auto a = SampleRandom(1000, 100, 3);
  const auto b = SampleRandom(1000, 100, 3);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 100u);
  EXPECT_NE(a, SampleRandom(1000, 100, 4));
  const auto shorter = SampleRandom(1000, 10, 3);
  EXPECT_TRUE(std::equal(shorter.begin(), shorter.end(), a.begin()));
}

TEST(SampleRandomTest, RoughlyUniform) {
  std::vector<int> hist(10, 0);
  for (std::uint64_t s = 0; s < 20000; ++s) ++hist[SampleRandom(10, 1, s).front()];
  // Binomial(20000, 0.1): sd ~ 42; allow 5 sd.
  for (int h : hist) EXPECT_NEAR(h, 2000, 212);
}

TEST(SampleRandomTest, RejectsBadArguments) {
  EXPECT_THROW(SampleRandom(0, 3, 1), ValidationError);
  EXPECT_THROW(SampleRandom(3, 0, 1), ValidationError);
}

TEST(SampleClusteringTest, HandComputedCentroid) {
  const std::vector<KeyVector> keys = {{0}, {1}, {2}, {3}, {10}};
  // Centroid 3.2: distances 3.2, 2.2, 1.2, 0.2, 6.8.
  EXPECT_EQ(SampleClustering(keys, 2), (std::vector<std::size_t>{3, 2}));
}

TEST(SampleClusteringTest, TiesAndClamp) {
  const std::vector<KeyVector> same(4, KeyVector{1.5f, -2.0f});
  EXPECT_EQ(SampleClustering(same, 2), (std::vector<std::size_t>{0, 1}));
  const std::vector<KeyVector> keys = {{0}, {5}, {1}};
  auto all = SampleClustering(keys, 10);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(SampleClusteringTest, MatchesRankOracleOnSmallSets) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t count = 1 + rng.UniformIndex(12);
    const std::size_t dim = 1 + rng.UniformIndex(3);
    std::vector<KeyVector> keys(count, KeyVector(dim));
    for (auto& k : keys) {
      for (auto& v : k) v = static_cast<float>(static_cast<int>(rng.UniformIndex(7)) - 3);
    }
    const auto rank = RankOracle(keys);
    for (std::size_t n = 1; n <= count + 1; ++n) {
      ASSERT_EQ(SampleClustering(keys, n), OracleByRank(rank, n)) << "trial " << trial << " n " << n;
    }
  }
}

TEST(SampleDistributedTest, StridePattern) {
  Rng rng(5);
  const auto keys = RandomKeys(1000, 4, rng);
  const auto picked = SampleDistributed(keys, 100);
  ASSERT_EQ(picked.size(), 100u);
  const auto order = CentroidOrder(keys);
  for (std::size_t k = 0; k < 100; ++k) EXPECT_EQ(picked[k], order[10 * k]);
}

TEST(SampleDistributedTest, HandSortedDistances) {
  // Centroid 6: distances 6, 2, 2, 6 -> order 1, 2, 0, 3; positions 0 and 2.
  const std::vector<KeyVector> keys = {{0}, {4}, {8}, {12}};
  EXPECT_EQ(SampleDistributed(keys, 2), (std::vector<std::size_t>{1, 0}));
}

TEST(SampleDistributedTest, FullCountIsSortedOrderAndDistinct) {
  Rng rng(8);
  const auto keys = RandomKeys(37, 3, rng);
  EXPECT_EQ(SampleDistributed(keys, 37), CentroidOrder(keys));
  for (std::size_t n = 1; n <= 37; ++n) {
    const auto picked = SampleDistributed(keys, n);
    EXPECT_EQ(std::set<std::size_t>(picked.begin(), picked.end()).size(), n);
  }
}

class BuildLibraryTest : public ::testing::Test {
 protected:
  std::vector<PromptEmbedding> Embeddings(std::initializer_list<std::string> ids) {
    std::vector<PromptEmbedding> out;
    for (const auto& id : ids) out.push_back(MakeEmbedding(id, 3, 4, rng_));
    return out;
  }
  Rng rng_{21};
};

TEST_F(BuildLibraryTest, CardinalityPerEmbedding) {
  KeyedInstances inst{{"b/p", RandomKeys(150, 6, rng_)}, {"a/p", RandomKeys(150, 6, rng_)}};
  const auto lib = BuildLibrary(Embeddings({"b/p", "a/p"}), inst, 100, SamplingMethod::kRandom, 7);
  EXPECT_EQ(lib.size(), 200u);
  EXPECT_EQ(lib.EntryCounts(), (std::map<std::string, std::size_t>{{"a/p", 100}, {"b/p", 100}}));
  // Ordinals follow ascending embedding id.
  EXPECT_EQ(lib.entries()[0].embedding_id, "a/p");
  EXPECT_EQ(lib.entries()[99].embedding_id, "a/p");
  EXPECT_EQ(lib.entries()[100].embedding_id, "b/p");
  for (std::size_t i = 0; i < lib.size(); ++i) EXPECT_EQ(lib.entries()[i].ordinal, i);
  EXPECT_EQ(lib.embeddings()[0].id, "a/p");
}

TEST_F(BuildLibraryTest, ClampsToAvailableInstances) {
  KeyedInstances inst{{"a/p", RandomKeys(40, 6, rng_)}};
  const auto lib = BuildLibrary(Embeddings({"a/p"}), inst, 100, SamplingMethod::kRandom, 1);
  EXPECT_EQ(lib.size(), 40u);
}

TEST_F(BuildLibraryTest, DeterministicForEveryMethod) {
  KeyedInstances inst{{"a/p", RandomKeys(120, 5, rng_)}, {"b/q", RandomKeys(90, 5, rng_)}};
  const auto embeddings = Embeddings({"a/p", "b/q"});
  for (auto method : {SamplingMethod::kRandom, SamplingMethod::kClustering, SamplingMethod::kDistributed}) {
    const auto a = BuildLibrary(embeddings, inst, 50, method, 7);
    const auto b = BuildLibrary(embeddings, inst, 50, method, 7);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 100u);
    // Every stored key is one of the embedding's instances.
    for (const auto& e : a.entries()) {
      const auto& pool = inst.at(e.embedding_id);
      EXPECT_NE(std::find(pool.begin(), pool.end(), e.key), pool.end());
    }
  }
}

TEST_F(BuildLibraryTest, RejectsDimensionMismatchNamingEmbedding) {
  KeyedInstances inst{{"a/p", RandomKeys(5, 6, rng_)}, {"b/q", RandomKeys(5, 7, rng_)}};
  try {
    BuildLibrary(Embeddings({"a/p", "b/q"}), inst, 10, SamplingMethod::kRandom, 1);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("b/q"), std::string::npos) << e.what();
  }
}

TEST_F(BuildLibraryTest, RejectsEmptyAndMissingInputs) {
  EXPECT_THROW(BuildLibrary({}, {}, 10, SamplingMethod::kRandom, 1), ValidationError);
  KeyedInstances inst{{"a/p", RandomKeys(5, 6, rng_)}};
  EXPECT_THROW(BuildLibrary(Embeddings({"a/p", "b/q"}), inst, 10, SamplingMethod::kRandom, 1), ValidationError);
  KeyedInstances stray{{"a/p", RandomKeys(5, 6, rng_)}, {"zzz", RandomKeys(5, 6, rng_)}};
  EXPECT_THROW(BuildLibrary(Embeddings({"a/p"}), stray, 10, SamplingMethod::kRandom, 1), ValidationError);
  EXPECT_THROW(BuildLibrary(Embeddings({"a/p"}), inst, 0, SamplingMethod::kRandom, 1), ValidationError);
}

TEST_F(BuildLibraryTest, LibraryInvariantsAreEnforced) {
  auto es = Embeddings({"a/p"});
  EXPECT_THROW(SourcePromptLibrary(2, 3, 4, es, {{{1.0f, 2.0f}, "nope", 0}}), ValidationError);
  EXPECT_THROW(SourcePromptLibrary(2, 3, 4, es, {{{1.0f, 2.0f}, "a/p", 1}}), ValidationError);
  EXPECT_THROW(SourcePromptLibrary(2, 3, 4, es, {{{1.0f}, "a/p", 0}}), ValidationError);
  EXPECT_THROW(SourcePromptLibrary(2, 5, 4, es, {}), ValidationError);
  auto dup = es;
  dup.push_back(es.front());
  EXPECT_THROW(SourcePromptLibrary(2, 3, 4, dup, {}), ValidationError);
  LibraryConfig tight{1, SamplingMethod::kRandom, 0};
  EXPECT_THROW(SourcePromptLibrary(2, 3, 4, es, {{{1, 2}, "a/p", 0}, {{3, 4}, "a/p", 1}}, tight), ValidationError);
  auto bad = es;
  bad.front().matrix.mutable_values()[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(SourcePromptLibrary(2, 3, 4, bad, {}), ValidationError);
}

TEST(SamplingMethodTest, ParsesNames) {
  EXPECT_EQ(ParseSamplingMethod("Clustering"), SamplingMethod::kClustering);
  EXPECT_EQ(SamplingMethodName(ParseSamplingMethod("distributed")), "distributed");
  EXPECT_THROW(ParseSamplingMethod("kmeans"), ValidationError);
}

}  // namespace
}  // namespace sprl
