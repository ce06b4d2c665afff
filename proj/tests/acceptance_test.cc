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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every check uses synthetic worlds or transcribed fixtures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sprl/error.h"
#include "sprl/eval_harness.h"
#include "sprl/library_io.h"
#include "sprl/mips_index.h"
#include "sprl/prompt_library.h"
#include "sprl/rng.h"
#include "sprl/selection.h"
#include "sprl/synthetic_world.h"

#ifndef SPRL_FIXTURE_DIR
#error "SPRL_FIXTURE_DIR must point at data/fixtures"
#endif

namespace {

using namespace sprl;

// Pinned tolerances.
constexpr double kScoreRelTol = 1e-6;
constexpr double kWeightSumTol = 1e-9;
// 0.6 and 0.4 are not binary-exact; allow two ulps at 40.
constexpr double kEq2Tol = 2 * 40.0 * std::numeric_limits<double>::epsilon();
constexpr double kFixtureTol = 0.01;
constexpr int kPlantedMinHits = 95;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void Report(const char* name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s  %-28s %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::vector<float> RandomVector(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(rng.Normal());
  return v;
}

SourcePromptLibrary RandomLibrary(Rng& rng, std::size_t count, std::size_t dim) {
  const std::size_t embeddings = 1 + rng.UniformIndex(std::min<std::size_t>(count, 40));
  std::vector<PromptEmbedding> es;
  KeyedInstances inst;
  for (std::size_t e = 0; e < embeddings; ++e) {
    char id[32];
    std::snprintf(id, sizeof(id), "ds%zu/p%03zu", e % 5, e);
    es.push_back({id, PromptMatrix(2, 3, RandomVector(rng, 6)), {"ds", id, "nli", "yes/no"}});
    inst[id] = {};
  }
  // Spread `count` keys over the embeddings; every embedding gets at least one.
  for (auto& [id, keys] : inst) keys.push_back(RandomVector(rng, dim));
  for (std::size_t i = embeddings; i < count; ++i) {
    auto it = inst.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.UniformIndex(embeddings)));
    it->second.push_back(RandomVector(rng, dim));
  }
  return BuildLibrary(std::move(es), inst, count, SamplingMethod::kRandom, rng.Next());
}

// ---- 1. MIPS exactness ----
Outcome MipsExactness() {
  Rng rng(101);
  std::size_t lists = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t count = 1 + rng.UniformIndex(1000);
    const std::size_t dim = 4 + rng.UniformIndex(61);
    auto lib = std::make_shared<const SourcePromptLibrary>(RandomLibrary(rng, count, dim));
    const MipsIndex index(lib);
    std::vector<KeyVector> queries;
    for (int q = 0; q < 8; ++q) queries.push_back(RandomVector(rng, dim));
    const std::size_t n = 1 + rng.UniformIndex(20);
    const auto got = index.BatchSearch(queries, n, 1 + static_cast<unsigned>(t % 4));
    for (std::size_t q = 0; q < queries.size(); ++q) {
      // Oracle: every dot product, stable argsort by score (ordinal order on ties).
      std::vector<double> scores(lib->size());
      for (std::size_t i = 0; i < lib->size(); ++i) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) s += static_cast<double>(queries[q][d]) * lib->entries()[i].key[d];
        scores[i] = s;
      }
      std::vector<std::size_t> order(lib->size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
      const std::size_t expect_n = std::min(n, lib->size());
      if (got[q].size() != expect_n) return {false, "hit count mismatch"};
      for (std::size_t k = 0; k < expect_n; ++k) {
        const auto& h = got[q][k];
        if (h.ordinal != order[k] || h.embedding_id != lib->entries()[order[k]].embedding_id) {
          return {false, "rank mismatch at library " + std::to_string(t)};
        }
        const double ref = scores[order[k]];
        if (std::abs(h.score - ref) > kScoreRelTol * std::max(1.0, std::abs(ref))) {
          return {false, "score mismatch at library " + std::to_string(t)};
        }
      }
      ++lists;
    }
  }
  return {true, "200 libraries, " + std::to_string(lists) + " hit lists identical; score rel tol 1e-6"};
}

// ---- 2. Selection algebra ----
Outcome SelectionAlgebra() {
  Rng rng(202);
  for (int t = 0; t < 1000; ++t) {
    CandidateTally tally;
    std::map<std::string, std::vector<double>> probs;
    const std::size_t ids = 1 + rng.UniformIndex(10);
    const std::size_t options = 2 + rng.UniformIndex(4);
    for (std::size_t i = 0; i < ids; ++i) {
      const std::string id = "e" + std::to_string(rng.UniformIndex(15));
      tally.counts[id] = 1 + rng.UniformIndex(8);
      std::vector<double> p(options);
      double sum = 0;
      for (auto& v : p) sum += (v = rng.Uniform01() + 1e-3);
      for (auto& v : p) v /= sum;
      probs[id] = p;
    }
    for (const auto& [id, c] : tally.counts) tally.total += c;
    const OptionProbsFn fn = [&](const std::string& id) { return probs.at(id); };
    const std::size_t n_prime = 1 + rng.UniformIndex(5);

    const auto freq = SelectTopFrequency(tally);
    if (Interpolate(tally, 1).chosen != freq.chosen) return {false, "(a) fails at tally " + std::to_string(t)};
    const auto var = SelectVariance(tally, fn);
    if (InterpolateByScore(tally, 1).chosen != var.chosen) return {false, "(b) fails at tally " + std::to_string(t)};
    for (const auto& r : {freq, var, Interpolate(tally, n_prime), InterpolateByScore(tally, n_prime)}) {
      double s = 0;
      for (const auto& c : r.chosen) s += c.weight;
      if (std::abs(s - 1.0) > kWeightSumTol) return {false, "(c) fails at tally " + std::to_string(t)};
    }
    CandidateTally scaled;
    const std::uint64_t k = 2 + rng.UniformIndex(97);
    for (const auto& [id, c] : tally.counts) scaled.counts[id] = c * k;
    scaled.total = tally.total * k;
    if (SelectTopFrequency(scaled).chosen != freq.chosen ||
        Interpolate(scaled, n_prime).chosen != Interpolate(tally, n_prime).chosen) {
      return {false, "(d) fails at tally " + std::to_string(t)};
    }
  }
  return {true, "1000 tallies: (a) (b) (c) (d) hold; weight sum tol 1e-9"};
}

// ---- 3. Variance score ----
Outcome VarianceScoreFidelity() {
  const double s = VarianceScore(4, std::vector<double>{0.6, 0.4});
  if (std::abs(s - 40.0) > kEq2Tol) return {false, "score(4,(0.6,0.4)) = " + FormatDouble(s)};
  // 20 x 20 grid: freq 1..20, probs (0.5 + d, 0.5 - d) with Var = d^2 >= 4e-4.
  auto probs = [](int j) { return std::vector<double>{0.5 + 0.02 * (j + 1), 0.5 - 0.02 * (j + 1)}; };
  for (int f = 1; f <= 20; ++f) {
    for (int j = 0; j < 20; ++j) {
      const double v = VarianceScore(f, probs(j));
      if (f < 20 && !(v < VarianceScore(f + 1, probs(j)))) return {false, "not increasing in freq"};
      if (j < 19 && !(v > VarianceScore(f, probs(j + 1)))) return {false, "not decreasing in variance"};
    }
  }
  return {true, "score(4,(0.6,0.4)) = " + FormatDouble(s) + " (40 within 2 ulp); 20x20 grid monotone"};
}

// ---- 4. Transcribed fixtures ----
Outcome FixtureArithmetic() {
  const std::filesystem::path dir(SPRL_FIXTURE_DIR);
  const auto fx = ReadRetrievalFixture(dir / "rte_retrievals.json");
  std::vector<double> col;
  for (const auto& r : fx.rows) col.push_back(r.retrieved_accuracy);
  const double rte = AggregateReport(col).mean;
  const auto table = ReadResultsTable(dir / "zero_shot_table.json");
  const double t0 = AggregateReport(table.rows.at("T0 (3B)")).mean;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "RTE retrieved avg %.4f (target 71.30), T0 row mean %.4f (target 51.22), tol 0.01",
                rte, t0);
  return {std::abs(rte - 71.30) <= kFixtureTol && std::abs(t0 - 51.22) <= kFixtureTol, buf};
}

// ---- 5. Planted optimum ----
Outcome PlantedOptimum() {
  const std::size_t qs[] = {1, 4, 8, 32};
  std::map<std::size_t, int> hits;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    WorldConfig wc;
    wc.seed = seed;
    wc.num_embeddings = 10;
    wc.separation = 4.0;
    wc.hard_prompts = 1;
    const auto world = GenerateWorld(wc);
    auto lib = std::make_shared<const SourcePromptLibrary>(
        BuildLibrary(world.embeddings, world.instances, kDefaultSamplesPerPrompt, SamplingMethod::kRandom, seed));
    const MipsIndex index(lib);
    const SyntheticProvider provider(world.provider);
    for (auto q : qs) {
      const auto run = RunPipeline(world.task, index, provider, Strategy::kFrequency, PipelineConfig{q, 10, 3, seed, 1});
      if (run.prompts.front().selection.chosen.front().id == world.planted_id) ++hits[q];
    }
  }
  bool monotone = true;
  for (std::size_t i = 1; i < std::size(qs); ++i) monotone &= hits[qs[i]] >= hits[qs[i - 1]];
  char buf[160];
  std::snprintf(buf, sizeof(buf), "Q=32 hits %d/100 (need >= %d); by Q {1,4,8,32}: %d %d %d %d%s", hits[32],
                kPlantedMinHits, hits[1], hits[4], hits[8], hits[32], monotone ? "" : " NOT monotone");
  return {hits[32] >= kPlantedMinHits && monotone, buf};
}

// ---- 6. Oracle dominance ----
Outcome OracleDominance() {
  Rng rng(606);
  int violations = 0;
  int comparisons = 0;
  for (int t = 0; t < 100; ++t) {
    WorldConfig wc;
    wc.seed = 1000 + static_cast<std::uint64_t>(t);
    wc.num_embeddings = 4 + rng.UniformIndex(10);
    wc.separation = 1.0 + 4.0 * rng.Uniform01();
    wc.distractor_rate = 0.8 * rng.Uniform01();
    wc.option_count = 2 + rng.UniformIndex(3);
    wc.hard_prompts = 1 + rng.UniformIndex(3);
    wc.instances_per_embedding = 40;
    wc.task_instances = 48;
    const auto world = GenerateWorld(wc);
    auto lib = std::make_shared<const SourcePromptLibrary>(
        BuildLibrary(world.embeddings, world.instances, 20, SamplingMethod::kRandom, wc.seed));
    const MipsIndex index(lib);
    const SyntheticProvider provider(world.provider);
    const PipelineConfig pc{1 + rng.UniformIndex(32), 1 + rng.UniformIndex(10), 1 + rng.UniformIndex(4), wc.seed, 1};
    for (auto strategy : kAllStrategies) {
      const auto run = RunPipeline(world.task, index, provider, strategy, pc);
      for (const auto& outcome : run.prompts) {
        std::vector<std::string> candidates;
        for (const auto& [id, c] : outcome.tally.counts) candidates.push_back(id);
        const auto oracle = OracleSelection(world.task, provider, outcome.hard_prompt_id, candidates);
        ++comparisons;
        if (oracle.accuracy < outcome.accuracy) ++violations;
      }
    }
  }
  return {violations == 0,
          "100 tasks, " + std::to_string(comparisons) + " comparisons, " + std::to_string(violations) + " violations"};
}

// ---- 7. Sampling methods ----
Outcome SamplingMethods() {
  Rng rng(707);
  std::size_t cases = 0;
  for (int t = 0; t < 400; ++t) {
    const std::size_t m = 1 + static_cast<std::size_t>(t % 12);
    const std::size_t dim = 1 + rng.UniformIndex(3);
    std::vector<KeyVector> keys(m, KeyVector(dim));
    for (auto& k : keys) {
      for (auto& v : k) v = static_cast<float>(static_cast<int>(rng.UniformIndex(5)) - 2);
    }
    // m^2 * squared distance to the centroid, exact in integers.
    std::vector<std::int64_t> d2(m, 0);
    for (std::size_t d = 0; d < dim; ++d) {
      std::int64_t sum = 0;
      for (const auto& k : keys) sum += static_cast<std::int64_t>(k[d]);
      for (std::size_t i = 0; i < m; ++i) {
        const std::int64_t diff = static_cast<std::int64_t>(m) * static_cast<std::int64_t>(keys[i][d]) - sum;
        d2[i] += diff * diff;
      }
    }
    for (std::size_t n = 1; n <= m; ++n) {
      // Exhaustive: the n-subset with the smallest total distance, ties to
      // the lexicographically smallest index set.
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      std::vector<std::size_t> best_set;
      for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
        std::int64_t total = 0;
        std::vector<std::size_t> set;
        for (std::size_t i = 0; i < m; ++i) {
          if (mask & (1u << i)) {
            total += d2[i];
            set.push_back(i);
          }
        }
        if (total < best || (total == best && set < best_set)) {
          best = total;
          best_set = set;
        }
      }
      auto got = SampleClustering(keys, n);
      std::sort(got.begin(), got.end());
      if (got != best_set) return {false, "clustering differs on a set of size " + std::to_string(m)};
      ++cases;
    }
  }
  // Distributed: independent stable argsort of squared centroid distances.
  std::vector<KeyVector> keys;
  for (int i = 0; i < 1000; ++i) keys.push_back(RandomVector(rng, 8));
  std::vector<double> centroid(8, 0.0);
  for (const auto& k : keys) {
    for (std::size_t d = 0; d < 8; ++d) centroid[d] += k[d];
  }
  for (auto& c : centroid) c /= 1000.0;
  std::vector<double> dist(1000, 0.0);
  for (std::size_t i = 0; i < 1000; ++i) {
    for (std::size_t d = 0; d < 8; ++d) dist[i] += (keys[i][d] - centroid[d]) * (keys[i][d] - centroid[d]);
  }
  std::vector<std::size_t> order(1000);
  for (std::size_t i = 0; i < 1000; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dist[a] < dist[b]; });
  std::vector<std::size_t> rank(1000);
  for (std::size_t r = 0; r < 1000; ++r) rank[order[r]] = r;
  const auto picked = SampleDistributed(keys, 100);
  if (picked.size() != 100) return {false, "distributed returned " + std::to_string(picked.size())};
  for (std::size_t k = 0; k < 100; ++k) {
    if (rank[picked[k]] != 10 * k) return {false, "distributed position " + std::to_string(k) + " is not " +
                                                      std::to_string(10 * k)};
  }
  return {true, std::to_string(cases) + " exhaustive clustering cases; distributed positions {0,10,...,990}"};
}

// ---- 8. Persistence ----
Outcome Persistence() {
  Rng rng(808);
  for (int t = 0; t < 100; ++t) {
    const auto lib = RandomLibrary(rng, 1 + rng.UniformIndex(200), 1 + rng.UniformIndex(32));
    const auto bytes = SerializeLibrary(lib);
    const auto back = DeserializeLibrary(bytes, lib.config());
    if (!(back == lib) || SerializeLibrary(back) != bytes) return {false, "round trip differs at " + std::to_string(t)};
  }
  const auto good = SerializeLibrary(RandomLibrary(rng, 20, 4));
  auto expect_code = [&](std::vector<std::uint8_t> bytes, FormatErrc code) {
    try {
      DeserializeLibrary(bytes);
    } catch (const FormatError& e) {
      return e.code() == code;
    }
    return false;
  };
  auto bad_magic = good;
  bad_magic[1] = 'Q';
  auto bad_version = good;
  bad_version[4] = 9;
  const std::vector<std::uint8_t> short_header(good.begin(), good.begin() + 20);
  auto zero_dim = good;
  zero_dim[8] = zero_dim[9] = zero_dim[10] = zero_dim[11] = 0;
  const bool ok = expect_code(bad_magic, FormatErrc::kBadMagic) &&
                  expect_code(bad_version, FormatErrc::kUnsupportedVersion) &&
                  expect_code(short_header, FormatErrc::kTruncated) && expect_code(zero_dim, FormatErrc::kBadField);
  return {ok, "100 libraries byte-identical; magic/version/truncated/zero-dim headers -> E_BAD_MAGIC, E_VERSION, "
              "E_TRUNCATED, E_FIELD"};
}

}  // namespace

int main() {
  Report("mips-exactness", MipsExactness);
  Report("selection-algebra", SelectionAlgebra);
  Report("variance-score", VarianceScoreFidelity);
  Report("fixture-arithmetic", FixtureArithmetic);
  Report("planted-optimum", PlantedOptimum);
  Report("oracle-dominance", OracleDominance);
  Report("sampling-methods", SamplingMethods);
  Report("persistence", Persistence);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
