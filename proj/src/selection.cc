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

#include "sprl/selection.h"

#include <algorithm>
#include <cmath>

#include "sprl/error.h"

namespace sprl {

namespace {

// Sorts ids by value descending, ties by id ascending, and keeps the first n.
template <typename Value>
std::vector<std::pair<std::string, Value>> TopByValue(const std::map<std::string, Value>& values, std::size_t n) {
  std::vector<std::pair<std::string, Value>> ranked(values.begin(), values.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(std::min(n, ranked.size()));
  return ranked;
}

template <typename Value>
std::vector<WeightedId> Proportional(const std::vector<std::pair<std::string, Value>>& picked) {
  double sum = 0.0;
  for (const auto& [id, v] : picked) sum += static_cast<double>(v);
  std::vector<WeightedId> out;
  out.reserve(picked.size());
  for (const auto& [id, v] : picked) out.push_back({id, static_cast<double>(v) / sum});
  return out;
}

void RequireNonEmpty(const CandidateTally& tally) {
  if (tally.empty()) throw ValidationError("cannot select from an empty tally");
}

void RequireScores(const CandidateTally& tally) {
  for (const auto& [id, count] : tally.counts) {
    if (!tally.scores.contains(id)) throw ValidationError("tally has no variance score for '" + id + "'");
  }
}

}  // namespace

std::string_view StrategyName(Strategy strategy) {
  switch (strategy) {
    case Strategy::kFrequency: return "freq";
    case Strategy::kInterpolation: return "inter";
    case Strategy::kVariance: return "var";
    case Strategy::kVarianceInterpolation: return "var-inter";
  }
  return "freq";
}

Strategy ParseStrategy(std::string_view name) {
  if (name == "freq" || name == "frequency") return Strategy::kFrequency;
  if (name == "inter" || name == "interpolation") return Strategy::kInterpolation;
  if (name == "var" || name == "variance") return Strategy::kVariance;
  if (name == "var-inter" || name == "variance-interpolation") return Strategy::kVarianceInterpolation;
  throw ValidationError("unknown strategy '" + std::string(name) + "' (expected freq|inter|var|var-inter)");
}

CandidateTally AggregateFrequency(std::span<const HitList> hit_lists) {
  if (hit_lists.empty()) throw ValidationError("no hit lists to aggregate");
  CandidateTally tally;
  for (const auto& hits : hit_lists) {
    for (const auto& hit : hits) {
      ++tally.counts[hit.embedding_id];
      ++tally.total;
    }
  }
  return tally;
}

SelectionResult SelectTopFrequency(const CandidateTally& tally) {
  RequireNonEmpty(tally);
  auto top = TopByValue(tally.counts, 1);
  return SelectionResult{Strategy::kFrequency, {{top.front().first, 1.0}}, std::nullopt};
}

SelectionResult SelectTopFrequency(const CandidateTally& tally, const SourcePromptLibrary& library) {
  auto result = SelectTopFrequency(tally);
  AttachPrompt(result, library);
  return result;
}

SelectionResult Interpolate(const CandidateTally& tally, std::size_t n_prime) {
  RequireNonEmpty(tally);
  if (n_prime == 0) throw ValidationError("n_prime must be at least 1");
  return SelectionResult{Strategy::kInterpolation, Proportional(TopByValue(tally.counts, n_prime)), std::nullopt};
}

SelectionResult Interpolate(const CandidateTally& tally, std::size_t n_prime, const SourcePromptLibrary& library) {
  auto result = Interpolate(tally, n_prime);
  AttachPrompt(result, library);
  return result;
}

double PopulationVariance(std::span<const double> probs) {
  if (probs.empty()) throw ValidationError("variance of an empty probability vector");
  double mean = 0.0;
  for (double p : probs) mean += p;
  mean /= static_cast<double>(probs.size());
  double acc = 0.0;
  for (double p : probs) acc += (p - mean) * (p - mean);
  return acc / static_cast<double>(probs.size());
}

double VarianceScore(std::uint64_t freq, std::span<const double> option_probs) {
  if (freq == 0) throw ValidationError("frequency must be positive");
  if (option_probs.empty()) throw ValidationError("option probabilities are empty");
  double sum = 0.0;
  for (double p : option_probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("option probabilities must be finite and nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    throw ValidationError("option probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
  const double var = std::max(PopulationVariance(option_probs), kVarianceFloor);
  return static_cast<double>(freq) / std::sqrt(var);
}

void ScoreCandidates(CandidateTally& tally, const OptionProbsFn& probs) {
  if (!probs) throw ValidationError("variance scoring needs an option-probability provider");
  std::map<std::string, double> scores;
  for (const auto& [id, count] : tally.counts) {
    std::vector<double> p;
    try {
      p = probs(id);
    } catch (const std::exception& ex) {
      throw ProviderError("probing '" + id + "' failed: " + ex.what());
    }
    scores[id] = VarianceScore(count, p);
  }
  tally.scores = std::move(scores);
}

SelectionResult SelectVariance(CandidateTally& tally, const OptionProbsFn& probs) {
  RequireNonEmpty(tally);
  ScoreCandidates(tally, probs);
  auto top = TopByValue(tally.scores, 1);
  return SelectionResult{Strategy::kVariance, {{top.front().first, 1.0}}, std::nullopt};
}

SelectionResult SelectVariance(CandidateTally& tally, const OptionProbsFn& probs, const SourcePromptLibrary& library) {
  auto result = SelectVariance(tally, probs);
  AttachPrompt(result, library);
  return result;
}

SelectionResult InterpolateByScore(const CandidateTally& tally, std::size_t n_prime) {
  RequireNonEmpty(tally);
  RequireScores(tally);
  if (n_prime == 0) throw ValidationError("n_prime must be at least 1");
  std::map<std::string, double> scores;
  for (const auto& [id, count] : tally.counts) scores[id] = tally.scores.at(id);
  return SelectionResult{Strategy::kVarianceInterpolation, Proportional(TopByValue(scores, n_prime)), std::nullopt};
}

SelectionResult InterpolateByScore(const CandidateTally& tally, std::size_t n_prime,
                                   const SourcePromptLibrary& library) {
  auto result = InterpolateByScore(tally, n_prime);
  AttachPrompt(result, library);
  return result;
}

PromptMatrix BlendPrompt(std::span<const WeightedId> chosen, const SourcePromptLibrary& library) {
  if (chosen.empty()) throw ValidationError("nothing to blend");
  std::vector<double> acc(static_cast<std::size_t>(library.prefix_len()) * library.model_dim(), 0.0);
  for (const auto& [id, weight] : chosen) {
    const PromptEmbedding* e = library.FindEmbedding(id);
    if (!e) throw ValidationError("selected embedding '" + id + "' is not in the library");
    const auto values = e->matrix.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * static_cast<double>(values[i]);
  }
  std::vector<float> out(acc.begin(), acc.end());
  return PromptMatrix(library.prefix_len(), library.model_dim(), std::move(out));
}

void AttachPrompt(SelectionResult& result, const SourcePromptLibrary& library) {
  result.prompt = BlendPrompt(result.chosen, library);
}

SelectionResult Select(Strategy strategy, CandidateTally& tally, std::size_t n_prime, const OptionProbsFn& probs) {
  switch (strategy) {
    case Strategy::kFrequency: return SelectTopFrequency(tally);
    case Strategy::kInterpolation: return Interpolate(tally, n_prime);
    case Strategy::kVariance: return SelectVariance(tally, probs);
    case Strategy::kVarianceInterpolation:
      ScoreCandidates(tally, probs);
      return InterpolateByScore(tally, n_prime);
  }
  throw ValidationError("unknown strategy");
}

}  // namespace sprl
