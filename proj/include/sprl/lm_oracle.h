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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sprl/jsonl.h"
#include "sprl/selection.h"

namespace sprl {

struct OptionProbeResult {
  std::string embedding_id;
  std::string hard_prompt_id;
  std::vector<double> option_probs;

  bool operator==(const OptionProbeResult&) const = default;
};

struct RankClassificationRecord {
  std::string instance_id;
  std::vector<double> option_loglikelihoods;
  std::size_t gold_index = 0;

  bool operator==(const RankClassificationRecord&) const = default;
};

// Stand-in for the frozen backbone LM.
//
// Implementations must be safe for concurrent const calls and referentially
// transparent: equal arguments give equal results.
class LmProvider {
 public:
  virtual ~LmProvider() = default;

  // Unnormalized per-option log-likelihoods of the answer choices under
  // (soft prompt, hard prompt) with no input instance. Throws ProviderError
  // for unknown ids.
  virtual std::vector<double> OptionLogScores(const std::string& embedding_id,
                                              const std::string& hard_prompt_id) const = 0;

  // One record per instance id, in order, scored with the soft prompt given
  // as a weighted blend of library embeddings.
  virtual std::vector<RankClassificationRecord> Classify(const std::string& hard_prompt_id,
                                                         std::span<const std::string> instance_ids,
                                                         std::span<const WeightedId> prompt) const = 0;
};

// exp-normalizes log-likelihoods into a distribution. Throws ValidationError
// when no option has a finite score or a score is NaN / +inf.
std::vector<double> NormalizeLogScores(std::span<const double> log_scores);

OptionProbeResult ProbeOptions(const LmProvider& provider, const std::string& embedding_id,
                               const std::string& hard_prompt_id);

// Argmax of the option log-likelihoods; ties go to the lowest index.
std::size_t RankClassify(const RankClassificationRecord& record);

// Fraction of predictions equal to the gold index.
double Accuracy(std::span<const RankClassificationRecord> records, std::span<const std::size_t> predictions);

// Rank-classifies every record and scores the predictions.
double ClassificationAccuracy(std::span<const RankClassificationRecord> records);

// ---- Synthetic provider ----

struct SyntheticProviderConfig {
  std::uint64_t seed = 0;
  std::size_t option_count = 2;
  // Every probe returns the uniform distribution.
  bool uniform = false;
  // Probability that a given instance is classified correctly under each
  // embedding. Unknown embeddings use default_affinity or are rejected.
  std::map<std::string, double> affinity;
  std::optional<double> default_affinity;
  // 1 = perfectly uniform option probabilities, 0 = maximally peaked.
  std::map<std::string, double> calibration;
  double default_calibration = 0.5;
  // Additive per-hard-prompt shift of every affinity. When non-empty, the
  // keys are the only accepted hard prompt ids.
  std::map<std::string, double> prompt_offsets;
};

// Deterministic LM substitute. Each instance draws a fixed uniform u from
// (seed, hard prompt, instance); it is classified correctly iff
// u < clamp(sum_i w_i * affinity_i + offset(hard prompt)). Accuracy is
// therefore monotone in the blended affinity, and a blend never beats its
// best component.
class SyntheticProvider final : public LmProvider {
 public:
  explicit SyntheticProvider(SyntheticProviderConfig config);

  const SyntheticProviderConfig& config() const { return config_; }
  double Affinity(const std::string& embedding_id) const;
  double EffectiveAffinity(const std::string& hard_prompt_id, std::span<const WeightedId> prompt) const;

  std::vector<double> OptionLogScores(const std::string& embedding_id,
                                      const std::string& hard_prompt_id) const override;
  std::vector<RankClassificationRecord> Classify(const std::string& hard_prompt_id,
                                                 std::span<const std::string> instance_ids,
                                                 std::span<const WeightedId> prompt) const override;

 private:
  void CheckHardPrompt(const std::string& hard_prompt_id) const;

  SyntheticProviderConfig config_;
};

OrderedJson SyntheticConfigToJson(const SyntheticProviderConfig& config);
SyntheticProviderConfig SyntheticConfigFromJson(const Json& j);

// ---- File provider ----

// Prompt key for record lookup: the embedding id for a single-embedding
// prompt, otherwise "id@weight+id@weight..." with 6-decimal weights.
std::string PromptKey(std::span<const WeightedId> prompt);

// Replays tables exported by the encoder bridge. Immutable after load.
class FileProvider final : public LmProvider {
 public:
  FileProvider() = default;

  void AddProbe(OptionProbeResult probe);
  // Records for one (hard prompt, prompt key) pair.
  void AddRecords(const std::string& hard_prompt_id, const std::string& prompt_key,
                  std::vector<RankClassificationRecord> records);

  std::vector<double> OptionLogScores(const std::string& embedding_id,
                                      const std::string& hard_prompt_id) const override;
  std::vector<RankClassificationRecord> Classify(const std::string& hard_prompt_id,
                                                 std::span<const std::string> instance_ids,
                                                 std::span<const WeightedId> prompt) const override;

 private:
  std::map<std::pair<std::string, std::string>, std::vector<double>> probes_;
  std::map<std::pair<std::string, std::string>, std::map<std::string, RankClassificationRecord>> records_;
};

// ---- Table files (JSON lines) ----
// Probe line:  {"embedding_id", "hard_prompt_id", "option_probs": [...]}
// Record line: {"instance_id", "option_loglikelihoods": [...], "gold_index"}
void WriteProbeTable(const std::filesystem::path& path, std::span<const OptionProbeResult> probes);
std::vector<OptionProbeResult> ReadProbeTable(const std::filesystem::path& path);
ValidationReport ValidateProbeTable(const std::filesystem::path& path);

void WriteRecordTable(const std::filesystem::path& path, std::span<const RankClassificationRecord> records);
std::vector<RankClassificationRecord> ReadRecordTable(const std::filesystem::path& path);
ValidationReport ValidateRecordTable(const std::filesystem::path& path);

}  // namespace sprl
