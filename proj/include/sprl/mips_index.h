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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sprl/prompt_library.h"

namespace sprl {

inline constexpr std::size_t kDefaultTopN = 10;

struct SearchHit {
  std::uint32_t ordinal = 0;
  std::string embedding_id;
  double score = 0.0;

  bool operator==(const SearchHit&) const = default;
};

using HitList = std::vector<SearchHit>;

enum class Metric {
  kInnerProduct,
  // Query and keys are L2-normalized at score time. Ablation only.
  kCosine,
};

// Exact brute-force maximum inner-product search over a library's keys.
//
// Scores accumulate in double, sequentially over dimensions, so they are
// bit-stable across runs, thread counts and platforms. Hits are ordered by
// (score descending, ordinal ascending).
//
// The index shares ownership of the library and never mutates it; any
// number of threads may search concurrently.
class MipsIndex {
 public:
  // Throws ValidationError on an empty library.
  explicit MipsIndex(std::shared_ptr<const SourcePromptLibrary> library, Metric metric = Metric::kInnerProduct);

  std::size_t size() const { return count_; }
  std::uint32_t dim() const { return dim_; }
  Metric metric() const { return metric_; }
  const SourcePromptLibrary& library() const { return *library_; }

  // min(top_n, size()) hits. Throws ValidationError naming both dimensions
  // when the query does not match key_dim.
  HitList Search(std::span<const float> query, std::size_t top_n) const;

  // Elementwise equal to repeated Search(); output order follows query order.
  // threads == 0 picks the hardware concurrency.
  std::vector<HitList> BatchSearch(std::span<const KeyVector> queries, std::size_t top_n,
                                   unsigned threads = 1) const;

 private:
  HitList SearchUnchecked(std::span<const float> query, std::size_t top_n) const;

  std::shared_ptr<const SourcePromptLibrary> library_;
  Metric metric_;
  std::uint32_t dim_;
  std::size_t count_;
  // Row-major count_ x dim_ copy of the keys (normalized for kCosine).
  std::vector<double> keys_;
};

}  // namespace sprl
