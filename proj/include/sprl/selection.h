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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sprl/mips_index.h"
#include "sprl/prompt_library.h"

namespace sprl {

inline constexpr std::size_t kDefaultInterpolationCandidates = 3;
// Floor applied to the option-probability variance before the square root.
inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kProbabilitySumTolerance = 1e-6;

// Per-embedding retrieval frequencies over all Q x N hits, optionally with
// variance-based ranking scores.
struct CandidateTally {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  std::map<std::string, double> scores;

  bool empty() const { return counts.empty(); }
  bool operator==(const CandidateTally&) const = default;
};

enum class Strategy { kFrequency, kInterpolation, kVariance, kVarianceInterpolation };

// "freq", "inter", "var", "var-inter".
std::string_view StrategyName(Strategy strategy);
Strategy ParseStrategy(std::string_view name);
inline constexpr Strategy kAllStrategies[] = {Strategy::kFrequency, Strategy::kInterpolation, Strategy::kVariance,
                                              Strategy::kVarianceInterpolation};

struct WeightedId {
  std::string id;
  double weight = 0.0;

  bool operator==(const WeightedId&) const = default;
};

struct SelectionResult {
  Strategy strategy = Strategy::kFrequency;
  // Weights lie in (0, 1] and sum to 1.
  std::vector<WeightedId> chosen;
  // The soft prompt to prepend; filled when a library is supplied.
  std::optional<PromptMatrix> prompt;
};

CandidateTally AggregateFrequency(std::span<const HitList> hit_lists);

// Most frequent id, ties to the lexicographically smallest id.
SelectionResult SelectTopFrequency(const CandidateTally& tally);
SelectionResult SelectTopFrequency(const CandidateTally& tally, const SourcePromptLibrary& library);

// Top-n_prime ids by (count desc, id asc), weighted by count share.
SelectionResult Interpolate(const CandidateTally& tally, std::size_t n_prime = kDefaultInterpolationCandidates);
SelectionResult Interpolate(const CandidateTally& tally, std::size_t n_prime, const SourcePromptLibrary& library);

double PopulationVariance(std::span<const double> probs);

// freq / sqrt(max(Var_pop(probs), kVarianceFloor)). Rejects probability
// vectors that are negative or do not sum to 1 within 1e-6.
double VarianceScore(std::uint64_t freq, std::span<const double> option_probs);

// Normalized option probabilities for one candidate under a fixed hard prompt.
using OptionProbsFn = std::function<std::vector<double>(const std::string& embedding_id)>;

// Fills tally.scores with VarianceScore for every candidate. A provider
// failure is rethrown as ProviderError naming the id.
void ScoreCandidates(CandidateTally& tally, const OptionProbsFn& probs);

// Scores every candidate, records the scores in the tally, and returns the
// highest-scoring id (ties to the lexicographically smallest id).
SelectionResult SelectVariance(CandidateTally& tally, const OptionProbsFn& probs);
SelectionResult SelectVariance(CandidateTally& tally, const OptionProbsFn& probs, const SourcePromptLibrary& library);

// Top-n_prime by (score desc, id asc), weighted by score share. Requires a
// score for every candidate.
SelectionResult InterpolateByScore(const CandidateTally& tally, std::size_t n_prime = kDefaultInterpolationCandidates);
SelectionResult InterpolateByScore(const CandidateTally& tally, std::size_t n_prime,
                                   const SourcePromptLibrary& library);

// Elementwise sum_i w_i * M_i, accumulated in double.
PromptMatrix BlendPrompt(std::span<const WeightedId> chosen, const SourcePromptLibrary& library);
void AttachPrompt(SelectionResult& result, const SourcePromptLibrary& library);

// Runs `strategy` end to end. `probs` is required for the variance strategies.
SelectionResult Select(Strategy strategy, CandidateTally& tally, std::size_t n_prime, const OptionProbsFn& probs);

}  // namespace sprl
