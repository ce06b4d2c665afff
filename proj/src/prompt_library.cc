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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <utility>

#include "sprl/error.h"
#include "sprl/rng.h"

namespace sprl {

namespace {

bool AllFiniteValues(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

PromptMatrix::PromptMatrix(std::uint32_t rows, std::uint32_t cols)
    : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * cols, 0.0f) {}

PromptMatrix::PromptMatrix(std::uint32_t rows, std::uint32_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(rows) * cols) {
    throw ValidationError("prompt matrix has " + std::to_string(values_.size()) + " values, expected " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

bool PromptMatrix::AllFinite() const { return AllFiniteValues(values_); }

std::string_view SamplingMethodName(SamplingMethod method) {
  switch (method) {
    case SamplingMethod::kRandom: return "random";
    case SamplingMethod::kClustering: return "clustering";
    case SamplingMethod::kDistributed: return "distributed";
  }
  return "random";
}

SamplingMethod ParseSamplingMethod(std::string_view name) {
  const std::string s = Lower(name);
  if (s == "random") return SamplingMethod::kRandom;
  if (s == "clustering") return SamplingMethod::kClustering;
  if (s == "distributed") return SamplingMethod::kDistributed;
  throw ValidationError("unknown sampling method '" + std::string(name) + "' (expected random|clustering|distributed)");
}

SourcePromptLibrary::SourcePromptLibrary(std::uint32_t key_dim, std::uint32_t prefix_len, std::uint32_t model_dim,
                                         std::vector<PromptEmbedding> embeddings, std::vector<LibraryEntry> entries,
                                         LibraryConfig config)
    : key_dim_(key_dim),
      prefix_len_(prefix_len),
      model_dim_(model_dim),
      embeddings_(std::move(embeddings)),
      entries_(std::move(entries)),
      config_(config) {
  if (key_dim_ == 0) throw ValidationError("key_dim must be positive");
  if (config_.n_per_prompt == 0) throw ValidationError("n_per_prompt must be positive");
  std::sort(embeddings_.begin(), embeddings_.end(),
            [](const PromptEmbedding& a, const PromptEmbedding& b) { return a.id < b.id; });
  for (std::uint32_t i = 0; i < embeddings_.size(); ++i) {
    const auto& e = embeddings_[i];
    if (e.matrix.rows() != prefix_len_ || e.matrix.cols() != model_dim_) {
      throw ValidationError("embedding '" + e.id + "' is " + std::to_string(e.matrix.rows()) + "x" +
                            std::to_string(e.matrix.cols()) + ", library expects " + std::to_string(prefix_len_) +
                            "x" + std::to_string(model_dim_));
    }
    if (!e.matrix.AllFinite()) throw ValidationError("embedding '" + e.id + "' has non-finite values");
    if (!by_id_.emplace(e.id, i).second) throw ValidationError("duplicate embedding id '" + e.id + "'");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& entry = entries_[i];
    if (entry.ordinal != i) {
      throw ValidationError("entry ordinal " + std::to_string(entry.ordinal) + " at position " + std::to_string(i));
    }
    if (entry.key.size() != key_dim_) {
      throw ValidationError("entry " + std::to_string(i) + " key has dimension " + std::to_string(entry.key.size()) +
                            ", expected " + std::to_string(key_dim_));
    }
    if (!AllFiniteValues(entry.key)) throw ValidationError("entry " + std::to_string(i) + " key has non-finite values");
    if (!by_id_.contains(entry.embedding_id)) {
      throw ValidationError("entry " + std::to_string(i) + " references unknown embedding '" + entry.embedding_id + "'");
    }
  }
  if (entries_.size() > config_.n_per_prompt * embeddings_.size()) {
    throw ValidationError("library holds " + std::to_string(entries_.size()) + " entries, more than n_per_prompt x " +
                          std::to_string(embeddings_.size()) + " embeddings");
  }
}

const PromptEmbedding* SourcePromptLibrary::FindEmbedding(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &embeddings_[it->second];
}

std::optional<std::uint32_t> SourcePromptLibrary::EmbeddingOrdinal(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, std::size_t> SourcePromptLibrary::EntryCounts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : entries_) ++counts[e.embedding_id];
  return counts;
}

bool SourcePromptLibrary::operator==(const SourcePromptLibrary& other) const {
  return key_dim_ == other.key_dim_ && prefix_len_ == other.prefix_len_ && model_dim_ == other.model_dim_ &&
         config_ == other.config_ && embeddings_ == other.embeddings_ && entries_ == other.entries_;
}

std::vector<std::size_t> SampleRandom(std::size_t count, std::size_t n, std::uint64_t seed) {
  if (count == 0) throw ValidationError("cannot sample from an empty set");
  if (n == 0) throw ValidationError("sample size must be positive");
  const std::size_t m = std::min(n, count);
  std::vector<std::size_t> pool(count);
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: position i receives a uniform pick of the remainder.
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.UniformIndex(count - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  return pool;
}

namespace {

// m^2 times the squared distance to the mean, i.e. sum_d (m * k_d - S_d)^2.
// Skipping the division keeps equidistant keys exactly tied whenever the
// coordinates sit on a coarse grid, so ties fall to the lower index.
std::vector<double> ScaledSquaredDistances(std::span<const KeyVector> keys) {
  if (keys.empty()) throw ValidationError("cannot compute the centroid of zero keys");
  const std::size_t dim = keys.front().size();
  std::vector<double> sum(dim, 0.0);
  for (const auto& k : keys) {
    if (k.size() != dim) throw ValidationError("keys have inconsistent dimensions");
    for (std::size_t d = 0; d < dim; ++d) sum[d] += k[d];
  }
  const double m = static_cast<double>(keys.size());
  std::vector<double> out;
  out.reserve(keys.size());
  for (const auto& k : keys) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = m * static_cast<double>(k[d]) - sum[d];
      acc += diff * diff;
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace

std::vector<double> CentroidDistances(std::span<const KeyVector> keys) {
  auto dist = ScaledSquaredDistances(keys);
  const double m = static_cast<double>(keys.size());
  for (auto& d : dist) d = std::sqrt(d) / m;
  return dist;
}

std::vector<std::size_t> CentroidOrder(std::span<const KeyVector> keys) {
  const auto dist = ScaledSquaredDistances(keys);
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  return order;
}

std::vector<std::size_t> SampleClustering(std::span<const KeyVector> keys, std::size_t n) {
  if (n == 0) throw ValidationError("sample size must be positive");
  auto order = CentroidOrder(keys);
  order.resize(std::min(n, order.size()));
  return order;
}

std::vector<std::size_t> SampleDistributed(std::span<const KeyVector> keys, std::size_t n) {
  if (n == 0) throw ValidationError("sample size must be positive");
  const auto order = CentroidOrder(keys);
  const std::size_t count = order.size();
  const std::size_t m = std::min(n, count);
  std::vector<std::size_t> picked;
  picked.reserve(m);
  for (std::size_t k = 0; k < m; ++k) picked.push_back(order[k * count / m]);
  return picked;
}

std::vector<std::size_t> SampleIndices(std::span<const KeyVector> keys, std::size_t n, SamplingMethod method,
                                       std::uint64_t seed) {
  switch (method) {
    case SamplingMethod::kRandom: return SampleRandom(keys.size(), n, seed);
    case SamplingMethod::kClustering: return SampleClustering(keys, n);
    case SamplingMethod::kDistributed: return SampleDistributed(keys, n);
  }
  throw ValidationError("unknown sampling method");
}

SourcePromptLibrary BuildLibrary(std::vector<PromptEmbedding> embeddings, const KeyedInstances& keyed_instances,
                                 std::size_t n, SamplingMethod method, std::uint64_t seed) {
  if (embeddings.empty()) throw ValidationError("cannot build a library from an empty embedding set");
  if (n == 0) throw ValidationError("n must be at least 1");
  std::sort(embeddings.begin(), embeddings.end(),
            [](const PromptEmbedding& a, const PromptEmbedding& b) { return a.id < b.id; });

  const std::uint32_t prefix_len = embeddings.front().matrix.rows();
  const std::uint32_t model_dim = embeddings.front().matrix.cols();
  std::optional<std::size_t> key_dim;

  for (const auto& [id, keys] : keyed_instances) {
    const bool known = std::any_of(embeddings.begin(), embeddings.end(), [&](const auto& e) { return e.id == id; });
    if (!known) throw ValidationError("instances reference unknown embedding '" + id + "'");
  }

  std::vector<LibraryEntry> entries;
  for (const auto& e : embeddings) {
    auto it = keyed_instances.find(e.id);
    if (it == keyed_instances.end() || it->second.empty()) {
      throw ValidationError("embedding '" + e.id + "' has no training instances");
    }
    const auto& keys = it->second;
    for (const auto& k : keys) {
      if (!key_dim) key_dim = k.size();
      if (k.size() != *key_dim || k.empty()) {
        throw ValidationError("embedding '" + e.id + "' has a key of dimension " + std::to_string(k.size()) +
                              ", expected " + std::to_string(*key_dim));
      }
    }
    for (std::size_t idx : SampleIndices(keys, n, method, MixSeed(seed, e.id))) {
      entries.push_back({keys[idx], e.id, static_cast<std::uint32_t>(entries.size())});
    }
  }
  return SourcePromptLibrary(static_cast<std::uint32_t>(*key_dim), prefix_len, model_dim, std::move(embeddings),
                             std::move(entries), LibraryConfig{n, method, seed});
}

}  // namespace sprl
