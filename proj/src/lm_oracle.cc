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

#include "sprl/lm_oracle.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sprl/error.h"
#include "sprl/rng.h"

namespace sprl {

std::vector<double> NormalizeLogScores(std::span<const double> log_scores) {
  if (log_scores.empty()) throw ValidationError("no option scores to normalize");
  double max = -std::numeric_limits<double>::infinity();
  for (double s : log_scores) {
    if (std::isnan(s) || s == std::numeric_limits<double>::infinity()) {
      throw ValidationError("option log-likelihoods must not be NaN or +inf");
    }
    max = std::max(max, s);
  }
  if (!std::isfinite(max)) throw ValidationError("all option log-likelihoods are -inf; cannot normalize");
  std::vector<double> probs;
  probs.reserve(log_scores.size());
  double sum = 0.0;
  for (double s : log_scores) {
    probs.push_back(std::exp(s - max));
    sum += probs.back();
  }
  for (double& p : probs) p /= sum;
  return probs;
}

OptionProbeResult ProbeOptions(const LmProvider& provider, const std::string& embedding_id,
                               const std::string& hard_prompt_id) {
  const auto scores = provider.OptionLogScores(embedding_id, hard_prompt_id);
  return OptionProbeResult{embedding_id, hard_prompt_id, NormalizeLogScores(scores)};
}

std::size_t RankClassify(const RankClassificationRecord& record) {
  const auto& ll = record.option_loglikelihoods;
  if (ll.size() < 2) throw ValidationError("rank classification needs at least two options");
  std::size_t best = 0;
  for (std::size_t i = 1; i < ll.size(); ++i) {
    if (ll[i] > ll[best]) best = i;
  }
  return best;
}

double Accuracy(std::span<const RankClassificationRecord> records, std::span<const std::size_t> predictions) {
  if (records.size() != predictions.size()) {
    throw ValidationError("accuracy over " + std::to_string(records.size()) + " records but " +
                          std::to_string(predictions.size()) + " predictions");
  }
  if (records.empty()) throw ValidationError("accuracy of zero records");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < records.size(); ++i) correct += predictions[i] == records[i].gold_index ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

double ClassificationAccuracy(std::span<const RankClassificationRecord> records) {
  std::vector<std::size_t> predictions;
  predictions.reserve(records.size());
  for (const auto& r : records) predictions.push_back(RankClassify(r));
  return Accuracy(records, predictions);
}

// ---- Synthetic provider ----

SyntheticProvider::SyntheticProvider(SyntheticProviderConfig config) : config_(std::move(config)) {
  if (config_.option_count < 2) throw ValidationError("synthetic provider needs at least two options");
}

void SyntheticProvider::CheckHardPrompt(const std::string& hard_prompt_id) const {
  if (!config_.prompt_offsets.empty() && !config_.prompt_offsets.contains(hard_prompt_id)) {
    throw ProviderError("unknown hard prompt '" + hard_prompt_id + "'");
  }
}

double SyntheticProvider::Affinity(const std::string& embedding_id) const {
  auto it = config_.affinity.find(embedding_id);
  if (it != config_.affinity.end()) return it->second;
  if (config_.default_affinity) return *config_.default_affinity;
  throw ProviderError("unknown embedding '" + embedding_id + "'");
}

double SyntheticProvider::EffectiveAffinity(const std::string& hard_prompt_id,
                                            std::span<const WeightedId> prompt) const {
  CheckHardPrompt(hard_prompt_id);
  if (prompt.empty()) throw ValidationError("empty soft prompt");
  double a = 0.0;
  for (const auto& [id, w] : prompt) a += w * Affinity(id);
  auto off = config_.prompt_offsets.find(hard_prompt_id);
  if (off != config_.prompt_offsets.end()) a += off->second;
  return std::clamp(a, 0.0, 1.0);
}

std::vector<double> SyntheticProvider::OptionLogScores(const std::string& embedding_id,
                                                       const std::string& hard_prompt_id) const {
  CheckHardPrompt(hard_prompt_id);
  Affinity(embedding_id);  // rejects unknown ids
  std::vector<double> scores(config_.option_count, 0.0);
  if (config_.uniform) return scores;
  auto it = config_.calibration.find(embedding_id);
  const double calibration = std::clamp(it != config_.calibration.end() ? it->second : config_.default_calibration, 0.0, 1.0);
  Rng rng(MixSeed(MixSeed(MixSeed(config_.seed, "probe"), embedding_id), hard_prompt_id));
  for (double& s : scores) s = (1.0 - calibration) * 2.0 * rng.Normal();
  return scores;
}

std::vector<RankClassificationRecord> SyntheticProvider::Classify(const std::string& hard_prompt_id,
                                                                  std::span<const std::string> instance_ids,
                                                                  std::span<const WeightedId> prompt) const {
  const double affinity = EffectiveAffinity(hard_prompt_id, prompt);
  const std::size_t k = config_.option_count;
  const std::uint64_t prompt_seed = MixSeed(MixSeed(config_.seed, "classify"), hard_prompt_id);
  const std::uint64_t gold_seed = MixSeed(config_.seed, "gold");

  std::vector<RankClassificationRecord> out;
  out.reserve(instance_ids.size());
  for (const auto& inst : instance_ids) {
    const std::uint64_t h = MixSeed(prompt_seed, inst);
    RankClassificationRecord rec;
    rec.instance_id = inst;
    rec.gold_index = static_cast<std::size_t>(MixSeed(gold_seed, inst) % k);
    rec.option_loglikelihoods.resize(k);
    for (std::size_t j = 0; j < k; ++j) rec.option_loglikelihoods[j] = -1.0 - 2.0 * HashToUnit(MixSeed(h, j + 1));
    const bool correct = HashToUnit(h) < affinity;
    const std::size_t winner =
        correct ? rec.gold_index : (rec.gold_index + 1 + static_cast<std::size_t>(MixSeed(h, "wrong") % (k - 1))) % k;
    rec.option_loglikelihoods[winner] = -0.5;
    out.push_back(std::move(rec));
  }
  return out;
}

OrderedJson SyntheticConfigToJson(const SyntheticProviderConfig& config) {
  OrderedJson j;
  j["kind"] = "synthetic";
  j["seed"] = config.seed;
  j["option_count"] = config.option_count;
  j["uniform"] = config.uniform;
  j["affinity"] = config.affinity;
  if (config.default_affinity) j["default_affinity"] = *config.default_affinity;
  j["calibration"] = config.calibration;
  j["default_calibration"] = config.default_calibration;
  j["prompt_offsets"] = config.prompt_offsets;
  return j;
}

SyntheticProviderConfig SyntheticConfigFromJson(const Json& j) {
  try {
    SyntheticProviderConfig c;
    c.seed = j.value("seed", std::uint64_t{0});
    c.option_count = j.value("option_count", std::size_t{2});
    c.uniform = j.value("uniform", false);
    if (j.contains("affinity")) c.affinity = j.at("affinity").get<std::map<std::string, double>>();
    if (j.contains("default_affinity")) c.default_affinity = j.at("default_affinity").get<double>();
    if (j.contains("calibration")) c.calibration = j.at("calibration").get<std::map<std::string, double>>();
    c.default_calibration = j.value("default_calibration", 0.5);
    if (j.contains("prompt_offsets")) c.prompt_offsets = j.at("prompt_offsets").get<std::map<std::string, double>>();
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(FormatErrc::kBadField, std::string("malformed synthetic provider config: ") + ex.what());
  }
}

// ---- File provider ----

std::string PromptKey(std::span<const WeightedId> prompt) {
  if (prompt.empty()) throw ValidationError("empty soft prompt");
  if (prompt.size() == 1) return prompt.front().id;
  std::string key;
  for (const auto& [id, w] : prompt) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", w);
    if (!key.empty()) key += '+';
    key += id + "@" + buf;
  }
  return key;
}

void FileProvider::AddProbe(OptionProbeResult probe) {
  probes_[{probe.embedding_id, probe.hard_prompt_id}] = std::move(probe.option_probs);
}

void FileProvider::AddRecords(const std::string& hard_prompt_id, const std::string& prompt_key,
                              std::vector<RankClassificationRecord> records) {
  auto& slot = records_[{hard_prompt_id, prompt_key}];
  for (auto& r : records) {
    std::string id = r.instance_id;
    slot[id] = std::move(r);
  }
}

std::vector<double> FileProvider::OptionLogScores(const std::string& embedding_id,
                                                  const std::string& hard_prompt_id) const {
  auto it = probes_.find({embedding_id, hard_prompt_id});
  if (it == probes_.end()) {
    throw ProviderError("no probe for embedding '" + embedding_id + "' under hard prompt '" + hard_prompt_id + "'");
  }
  std::vector<double> out;
  out.reserve(it->second.size());
  for (double p : it->second) out.push_back(std::log(p));
  return out;
}

std::vector<RankClassificationRecord> FileProvider::Classify(const std::string& hard_prompt_id,
                                                             std::span<const std::string> instance_ids,
                                                             std::span<const WeightedId> prompt) const {
  const std::string key = PromptKey(prompt);
  auto it = records_.find({hard_prompt_id, key});
  if (it == records_.end()) {
    throw ProviderError("no records for prompt '" + key + "' under hard prompt '" + hard_prompt_id + "'");
  }
  std::vector<RankClassificationRecord> out;
  out.reserve(instance_ids.size());
  for (const auto& inst : instance_ids) {
    auto rec = it->second.find(inst);
    if (rec == it->second.end()) {
      throw ProviderError("no record for instance '" + inst + "' (prompt '" + key + "', hard prompt '" +
                          hard_prompt_id + "')");
    }
    out.push_back(rec->second);
  }
  return out;
}

// ---- Table files ----

void WriteProbeTable(const std::filesystem::path& path, std::span<const OptionProbeResult> probes) {
  std::string out;
  for (const auto& p : probes) {
    out += '{';
    AppendKey(out, "embedding_id");
    AppendString(out, p.embedding_id);
    out += ',';
    AppendKey(out, "hard_prompt_id");
    AppendString(out, p.hard_prompt_id);
    out += ',';
    AppendKey(out, "option_probs");
    AppendDoubles(out, p.option_probs);
    out += "}\n";
  }
  WriteTextFile(path, out);
}

namespace {

std::vector<OptionProbeResult> ReadProbes(const std::filesystem::path& path, ValidationReport* collect) {
  std::vector<OptionProbeResult> out;
  ForEachJsonLine(path, [&](std::uint64_t line, const OrderedJson& obj) {
    OptionProbeResult p;
    p.embedding_id = RequireString(obj, "embedding_id", line);
    p.hard_prompt_id = RequireString(obj, "hard_prompt_id", line);
    p.option_probs = RequireNumberArray(obj, "option_probs", line);
    double sum = 0.0;
    for (double v : p.option_probs) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw FormatError(FormatErrc::kBadField, "line " + std::to_string(line) + ": probabilities must be finite and >= 0",
                          line);
      }
      sum += v;
    }
    if (p.option_probs.empty() || std::abs(sum - 1.0) > kProbabilitySumTolerance) {
      throw FormatError(FormatErrc::kBadField,
                        "line " + std::to_string(line) + ": option_probs sum to " + FormatDouble(sum) + ", expected 1",
                        line);
    }
    out.push_back(std::move(p));
  }, collect);
  return out;
}

}  // namespace

std::vector<OptionProbeResult> ReadProbeTable(const std::filesystem::path& path) { return ReadProbes(path, nullptr); }

ValidationReport ValidateProbeTable(const std::filesystem::path& path) {
  ValidationReport report;
  // Parse errors are reported once, by the reader below.
  ValidationReport parse_errors;
  try {
    ForEachJsonLine(path, [&](std::uint64_t line, const OrderedJson& obj) {
      ++report.records;
      CheckFieldOrder(obj, {"embedding_id", "hard_prompt_id", "option_probs"}, line, report);
    }, &parse_errors);
    const auto probes = ReadProbes(path, &report);
    std::map<std::pair<std::string, std::string>, int> seen;
    for (const auto& p : probes) {
      if (p.option_probs.size() != probes.front().option_probs.size()) {
        report.warnings.push_back("probe ('" + p.embedding_id + "', '" + p.hard_prompt_id +
                                  "') has a different option count than the first probe");
      }
      if (++seen[{p.embedding_id, p.hard_prompt_id}] == 2) {
        report.errors.push_back("duplicate probe ('" + p.embedding_id + "', '" + p.hard_prompt_id + "')");
      }
    }
    if (probes.empty()) report.warnings.push_back("file holds no probes");
  } catch (const FormatError& ex) {
    report.errors.push_back(ex.what());
  }
  return report;
}

void WriteRecordTable(const std::filesystem::path& path, std::span<const RankClassificationRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += '{';
    AppendKey(out, "instance_id");
    AppendString(out, r.instance_id);
    out += ',';
    AppendKey(out, "option_loglikelihoods");
    AppendDoubles(out, r.option_loglikelihoods);
    out += ',';
    AppendKey(out, "gold_index");
    out += std::to_string(r.gold_index);
    out += "}\n";
  }
  WriteTextFile(path, out);
}

namespace {

std::vector<RankClassificationRecord> ReadRecords(const std::filesystem::path& path, ValidationReport* collect) {
  std::vector<RankClassificationRecord> out;
  ForEachJsonLine(path, [&](std::uint64_t line, const OrderedJson& obj) {
    RankClassificationRecord r;
    r.instance_id = RequireString(obj, "instance_id", line);
    r.option_loglikelihoods = RequireNumberArray(obj, "option_loglikelihoods", line);
    for (double v : r.option_loglikelihoods) {
      if (!std::isfinite(v)) {
        throw FormatError(FormatErrc::kNonFinite, "line " + std::to_string(line) + ": non-finite log-likelihood", line);
      }
    }
    const auto& gold = RequireField(obj, "gold_index", line);
    if (!gold.is_number_unsigned() || gold.get<std::size_t>() >= r.option_loglikelihoods.size()) {
      throw FormatError(FormatErrc::kBadField, "line " + std::to_string(line) + ": gold_index out of range", line);
    }
    r.gold_index = gold.get<std::size_t>();
    out.push_back(std::move(r));
  }, collect);
  return out;
}

}  // namespace

std::vector<RankClassificationRecord> ReadRecordTable(const std::filesystem::path& path) { return ReadRecords(path, nullptr); }

ValidationReport ValidateRecordTable(const std::filesystem::path& path) {
  ValidationReport report;
  // Parse errors are reported once, by the reader below.
  ValidationReport parse_errors;
  try {
    ForEachJsonLine(path, [&](std::uint64_t line, const OrderedJson& obj) {
      ++report.records;
      CheckFieldOrder(obj, {"instance_id", "option_loglikelihoods", "gold_index"}, line, report);
    }, &parse_errors);
    const auto records = ReadRecords(path, &report);
    std::map<std::string, int> seen;
    for (const auto& r : records) {
      if (r.option_loglikelihoods.size() < 2) {
        report.errors.push_back("record '" + r.instance_id + "' has fewer than two options");
      }
      if (++seen[r.instance_id] == 2) report.errors.push_back("duplicate instance '" + r.instance_id + "'");
    }
    if (records.empty()) report.warnings.push_back("file holds no records");
  } catch (const FormatError& ex) {
    report.errors.push_back(ex.what());
  }
  return report;
}

}  // namespace sprl
