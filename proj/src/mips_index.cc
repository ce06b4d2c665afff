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

#include "sprl/mips_index.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "sprl/error.h"

namespace sprl {

namespace {

void Normalize(std::span<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

}  // namespace

MipsIndex::MipsIndex(std::shared_ptr<const SourcePromptLibrary> library, Metric metric)
    : library_(std::move(library)), metric_(metric) {
  if (!library_ || library_->empty()) throw ValidationError("cannot index an empty library");
  dim_ = library_->key_dim();
  count_ = library_->size();
  keys_.resize(count_ * dim_);
  for (std::size_t i = 0; i < count_; ++i) {
    const auto& key = library_->entries()[i].key;
    std::span<double> row(keys_.data() + i * dim_, dim_);
    std::copy(key.begin(), key.end(), row.begin());
    if (metric_ == Metric::kCosine) Normalize(row);
  }
}

HitList MipsIndex::Search(std::span<const float> query, std::size_t top_n) const {
  if (query.size() != dim_) {
    throw ValidationError("query dimension " + std::to_string(query.size()) + " does not match key_dim " +
                          std::to_string(dim_));
  }
  if (top_n == 0) throw ValidationError("top_n must be at least 1");
  return SearchUnchecked(query, top_n);
}

HitList MipsIndex::SearchUnchecked(std::span<const float> query, std::size_t top_n) const {
  std::vector<double> q(query.begin(), query.end());
  if (metric_ == Metric::kCosine) Normalize(q);

  std::vector<double> scores(count_);
  for (std::size_t i = 0; i < count_; ++i) {
    const double* row = keys_.data() + i * dim_;
    double acc = 0.0;
    for (std::uint32_t d = 0; d < dim_; ++d) acc += q[d] * row[d];
    scores[i] = acc;
  }

  const std::size_t n = std::min(top_n, count_);
  std::vector<std::uint32_t> order(count_);
  std::iota(order.begin(), order.end(), 0u);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });

  HitList hits;
  hits.reserve(n);
  const auto entries = library_->entries();
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint32_t ord = order[k];
    hits.push_back({ord, entries[ord].embedding_id, scores[ord]});
  }
  return hits;
}

std::vector<HitList> MipsIndex::BatchSearch(std::span<const KeyVector> queries, std::size_t top_n,
                                            unsigned threads) const {
  if (top_n == 0) throw ValidationError("top_n must be at least 1");
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (queries[i].size() != dim_) {
      throw ValidationError("query " + std::to_string(i) + " has dimension " + std::to_string(queries[i].size()) +
                            ", expected key_dim " + std::to_string(dim_));
    }
  }
  std::vector<HitList> out(queries.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, queries.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = SearchUnchecked(queries[i], top_n);
    return out;
  }
  // Each worker writes only its own slots, so output order is query order.
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t i = t; i < queries.size(); i += threads) out[i] = SearchUnchecked(queries[i], top_n);
      });
    }
  }
  return out;
}

}  // namespace sprl
