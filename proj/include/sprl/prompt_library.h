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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sprl {

inline constexpr std::uint32_t kDefaultPrefixLen = 100;
inline constexpr std::size_t kDefaultSamplesPerPrompt = 100;

using KeyVector = std::vector<float>;

// Dense row-major prefix_len x model_dim block of soft-prompt token embeddings.
class PromptMatrix {
 public:
  PromptMatrix() = default;
  PromptMatrix(std::uint32_t rows, std::uint32_t cols);
  PromptMatrix(std::uint32_t rows, std::uint32_t cols, std::vector<float> values);

  std::uint32_t rows() const { return rows_; }
  std::uint32_t cols() const { return cols_; }
  std::span<const float> values() const { return values_; }
  std::span<float> mutable_values() { return values_; }
  float at(std::uint32_t r, std::uint32_t c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  bool AllFinite() const;

  bool operator==(const PromptMatrix&) const = default;

 private:
  std::uint32_t rows_ = 0;
  std::uint32_t cols_ = 0;
  std::vector<float> values_;
};

struct PromptMetadata {
  std::string source_dataset;
  std::string prompt_name;
  std::string task_cluster;
  // Surface form of the answer options ("yes/no", "positive/negative"); may be empty.
  std::string answer_choice_format;

  bool operator==(const PromptMetadata&) const = default;
};

struct PromptEmbedding {
  // Convention: "dataset/prompt_name".
  std::string id;
  PromptMatrix matrix;
  PromptMetadata metadata;

  bool operator==(const PromptEmbedding&) const = default;
};

struct LibraryEntry {
  KeyVector key;
  std::string embedding_id;
  std::uint32_t ordinal = 0;

  bool operator==(const LibraryEntry&) const = default;
};

enum class SamplingMethod { kRandom, kClustering, kDistributed };

std::string_view SamplingMethodName(SamplingMethod method);
// Accepts "random", "clustering", "distributed" (case-insensitive).
SamplingMethod ParseSamplingMethod(std::string_view name);

struct LibraryConfig {
  std::size_t n_per_prompt = kDefaultSamplesPerPrompt;
  SamplingMethod sampling_method = SamplingMethod::kRandom;
  std::uint64_t seed = 0;

  bool operator==(const LibraryConfig&) const = default;
};

// Immutable key -> soft prompt store. Embeddings are kept in ascending id
// order; entry ordinals are dense and match entry positions.
class SourcePromptLibrary {
 public:
  // Validates every invariant and throws ValidationError on violation.
  SourcePromptLibrary(std::uint32_t key_dim, std::uint32_t prefix_len, std::uint32_t model_dim,
                      std::vector<PromptEmbedding> embeddings, std::vector<LibraryEntry> entries,
                      LibraryConfig config = {});

  std::uint32_t key_dim() const { return key_dim_; }
  std::uint32_t prefix_len() const { return prefix_len_; }
  std::uint32_t model_dim() const { return model_dim_; }
  const LibraryConfig& config() const { return config_; }

  std::span<const PromptEmbedding> embeddings() const { return embeddings_; }
  std::span<const LibraryEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const PromptEmbedding* FindEmbedding(std::string_view id) const;
  std::optional<std::uint32_t> EmbeddingOrdinal(std::string_view id) const;
  // Entries stored per embedding id.
  std::map<std::string, std::size_t> EntryCounts() const;

  bool operator==(const SourcePromptLibrary& other) const;

 private:
  std::uint32_t key_dim_;
  std::uint32_t prefix_len_;
  std::uint32_t model_dim_;
  std::vector<PromptEmbedding> embeddings_;
  std::vector<LibraryEntry> entries_;
  LibraryConfig config_;
  std::unordered_map<std::string, std::uint32_t> by_id_;
};

// Training-instance keys grouped by the embedding they were prompted with.
using KeyedInstances = std::map<std::string, std::vector<KeyVector>>;

// Uniform sample without replacement of min(n, count) indices from [0, count),
// in draw order. The first k draws for a seed do not depend on n.
std::vector<std::size_t> SampleRandom(std::size_t count, std::size_t n, std::uint64_t seed);

// Euclidean distance of every key to the arithmetic mean of all keys.
std::vector<double> CentroidDistances(std::span<const KeyVector> keys);

// Indices of all keys ordered by ascending centroid distance, ties by index.
std::vector<std::size_t> CentroidOrder(std::span<const KeyVector> keys);

// The min(n, count) keys closest to the centroid, nearest first.
std::vector<std::size_t> SampleClustering(std::span<const KeyVector> keys, std::size_t n);

// Strided picks over the centroid order: positions floor(k * count / m),
// k = 0..m-1, with m = min(n, count).
std::vector<std::size_t> SampleDistributed(std::span<const KeyVector> keys, std::size_t n);

std::vector<std::size_t> SampleIndices(std::span<const KeyVector> keys, std::size_t n, SamplingMethod method,
                                       std::uint64_t seed);

// Builds the library: per embedding (ascending id), min(n, available) keys
// chosen by `method`; ordinals follow (embedding id, selection order).
SourcePromptLibrary BuildLibrary(std::vector<PromptEmbedding> embeddings, const KeyedInstances& keyed_instances,
                                 std::size_t n, SamplingMethod method, std::uint64_t seed);

}  // namespace sprl
