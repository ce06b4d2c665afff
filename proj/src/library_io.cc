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

#include "sprl/library_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "sprl/error.h"

namespace sprl {

namespace {

class ByteWriter {
 public:
  void PutU32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void PutU64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void PutF32(float v) { PutU32(std::bit_cast<std::uint32_t>(v)); }
  void PutBytes(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void PutString(std::string_view s) {
    PutU32(static_cast<std::uint32_t>(s.size()));
    PutBytes(s);
  }
  std::vector<std::uint8_t> Take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

  void Need(std::uint64_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(FormatErrc::kTruncated,
                        std::string("file ends at byte ") + std::to_string(bytes_.size()) + " while reading " + what +
                            " at byte offset " + std::to_string(pos_),
                        pos_);
    }
  }
  std::uint32_t GetU32(const char* what) {
    Need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t GetU64(const char* what) {
    Need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float GetF32(const char* what) { return std::bit_cast<float>(GetU32(what)); }
  std::string GetBytes(std::uint64_t n, const char* what) {
    Need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::string GetString(const char* what) { return GetBytes(GetU32(what), what); }

  void ReadFloats(std::vector<float>& out, std::uint64_t n, const char* what) {
    Need(n * 4, what);
    out.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::uint64_t at = pos_;
      out[i] = GetF32(what);
      if (!std::isfinite(out[i])) {
        throw FormatError(FormatErrc::kNonFinite, std::string("non-finite ") + what + " value at byte offset " +
                                                      std::to_string(at),
                          at);
      }
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::uint64_t pos_ = 0;
};

std::string Printable(std::string_view raw) {
  std::string out;
  for (unsigned char c : raw) {
    if (c >= 0x20 && c < 0x7f) {
      out += static_cast<char>(c);
    } else {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\x%02x", c);
      out += buf;
    }
  }
  return out;
}

}  // namespace

std::string MetadataToJson(const PromptMetadata& metadata) {
  Json j = {{"source_dataset", metadata.source_dataset},
            {"prompt_name", metadata.prompt_name},
            {"task_cluster", metadata.task_cluster},
            {"answer_choice_format", metadata.answer_choice_format}};
  return j.dump();
}

PromptMetadata MetadataFromJson(const Json& j) {
  if (!j.is_object()) throw FormatError(FormatErrc::kBadMetadata, "metadata must be a JSON object");
  auto field = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end()) return {};
    if (!it->is_string()) throw FormatError(FormatErrc::kBadMetadata, std::string("metadata '") + key + "' must be a string");
    return it->get<std::string>();
  };
  return PromptMetadata{field("source_dataset"), field("prompt_name"), field("task_cluster"),
                        field("answer_choice_format")};
}

std::vector<std::uint8_t> SerializeLibrary(const SourcePromptLibrary& library) {
  ByteWriter w;
  w.PutBytes(std::string_view(kLibraryMagic, 4));
  w.PutU32(kLibraryVersion);
  w.PutU32(library.key_dim());
  w.PutU32(library.prefix_len());
  w.PutU32(library.model_dim());
  w.PutU32(static_cast<std::uint32_t>(library.embeddings().size()));
  w.PutU64(library.entries().size());
  for (const auto& e : library.embeddings()) {
    w.PutString(e.id);
    w.PutString(MetadataToJson(e.metadata));
    for (float v : e.matrix.values()) w.PutF32(v);
  }
  for (const auto& entry : library.entries()) {
    w.PutU32(*library.EmbeddingOrdinal(entry.embedding_id));
    for (float v : entry.key) w.PutF32(v);
  }
  return w.Take();
}

SourcePromptLibrary DeserializeLibrary(std::span<const std::uint8_t> bytes, const LibraryConfig& config) {
  ByteReader r(bytes);
  const std::string magic = r.GetBytes(4, "magic");
  if (magic != std::string_view(kLibraryMagic, 4)) {
    throw FormatError(FormatErrc::kBadMagic, "magic mismatch: found '" + Printable(magic) + "', expected 'SPLB'", 0);
  }
  const std::uint32_t version = r.GetU32("version");
  if (version != kLibraryVersion) {
    throw FormatError(FormatErrc::kUnsupportedVersion,
                      "version mismatch: found " + std::to_string(version) + ", expected " +
                          std::to_string(kLibraryVersion),
                      4);
  }
  const std::uint32_t key_dim = r.GetU32("key_dim");
  const std::uint32_t prefix_len = r.GetU32("prefix_len");
  const std::uint32_t model_dim = r.GetU32("model_dim");
  const std::uint32_t embedding_count = r.GetU32("embedding_count");
  const std::uint64_t entry_count = r.GetU64("entry_count");
  if (key_dim == 0) throw FormatError(FormatErrc::kBadField, "key_dim is zero", 8);

  std::vector<PromptEmbedding> embeddings;
  std::vector<std::string> ids;
  const std::uint64_t matrix_len = static_cast<std::uint64_t>(prefix_len) * model_dim;
  for (std::uint32_t i = 0; i < embedding_count; ++i) {
    PromptEmbedding e;
    e.id = r.GetString("embedding id");
    const std::uint64_t meta_at = r.offset();
    const std::string meta = r.GetString("embedding metadata");
    try {
      e.metadata = MetadataFromJson(Json::parse(meta));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(FormatErrc::kBadMetadata, "metadata of '" + e.id + "' is not valid JSON: " + ex.what(), meta_at);
    }
    std::vector<float> values;
    r.ReadFloats(values, matrix_len, "embedding matrix");
    e.matrix = PromptMatrix(prefix_len, model_dim, std::move(values));
    ids.push_back(e.id);
    embeddings.push_back(std::move(e));
  }

  std::vector<LibraryEntry> entries;
  for (std::uint64_t i = 0; i < entry_count; ++i) {
    const std::uint64_t at = r.offset();
    const std::uint32_t ordinal = r.GetU32("entry embedding ordinal");
    if (ordinal >= embedding_count) {
      throw FormatError(FormatErrc::kBadReference,
                        "entry " + std::to_string(i) + " references embedding ordinal " + std::to_string(ordinal) +
                            " of " + std::to_string(embedding_count),
                        at);
    }
    LibraryEntry entry;
    r.ReadFloats(entry.key, key_dim, "entry key");
    entry.embedding_id = ids[ordinal];
    entry.ordinal = static_cast<std::uint32_t>(i);
    entries.push_back(std::move(entry));
  }
  if (r.remaining() != 0) {
    throw FormatError(FormatErrc::kTrailingBytes, std::to_string(r.remaining()) + " unexpected bytes after the last entry",
                      r.offset());
  }
  if (!std::is_sorted(ids.begin(), ids.end())) {
    throw FormatError(FormatErrc::kBadReference, "embedding ids are not in ascending order");
  }
  try {
    return SourcePromptLibrary(key_dim, prefix_len, model_dim, std::move(embeddings), std::move(entries), config);
  } catch (const ValidationError& ex) {
    throw FormatError(FormatErrc::kBadReference, ex.what());
  }
}

std::filesystem::path ManifestPath(const std::filesystem::path& library_path) {
  return std::filesystem::path(library_path.string() + ".manifest.json");
}

OrderedJson LibraryManifest(const SourcePromptLibrary& library) {
  OrderedJson m;
  m["version"] = kLibraryVersion;
  m["format"] = "SPLB";
  m["build_config"] = {{"n_per_prompt", library.config().n_per_prompt},
                       {"sampling_method", std::string(SamplingMethodName(library.config().sampling_method))},
                       {"seed", library.config().seed}};
  m["shape"] = {{"key_dim", library.key_dim()},
                {"prefix_len", library.prefix_len()},
                {"model_dim", library.model_dim()},
                {"embedding_count", library.embeddings().size()},
                {"entry_count", library.entries().size()}};
  m["provenance"] = {
      {"upstream_training_samples_per_dataset", 5000},
      {"keys", "mean of last-layer hidden states of the dense retriever over each prompted training input"},
      {"values", "soft prompt embeddings trained externally, one per (source dataset, hard prompt)"}};
  return m;
}

LibraryConfig ParseManifestConfig(const Json& manifest) {
  try {
    const auto& b = manifest.at("build_config");
    LibraryConfig c;
    c.n_per_prompt = b.at("n_per_prompt").get<std::size_t>();
    c.sampling_method = ParseSamplingMethod(b.at("sampling_method").get<std::string>());
    c.seed = b.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(FormatErrc::kBadField, std::string("malformed library manifest: ") + ex.what());
  }
}

void SaveLibrary(const SourcePromptLibrary& library, const std::filesystem::path& path) {
  const auto bytes = SerializeLibrary(library);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::kIo, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatErrc::kIo, "short write to '" + path.string() + "'");
  out.close();
  WriteTextFile(ManifestPath(path), LibraryManifest(library).dump(2) + "\n");
}

SourcePromptLibrary LoadLibrary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const auto manifest_path = ManifestPath(path);
  if (std::filesystem::exists(manifest_path)) {
    Json manifest;
    try {
      manifest = Json::parse(ReadTextFile(manifest_path));
    } catch (const nlohmann::json::parse_error& ex) {
      throw FormatError(FormatErrc::kBadJson, manifest_path.string() + ": " + ex.what());
    }
    return DeserializeLibrary(bytes, ParseManifestConfig(manifest));
  }
  // No manifest: size n_per_prompt from the data so the count invariant holds.
  LibraryConfig config;
  config.n_per_prompt = std::numeric_limits<std::uint32_t>::max();
  auto lib = DeserializeLibrary(bytes, config);
  std::size_t most = kDefaultSamplesPerPrompt;
  for (const auto& [id, n] : lib.EntryCounts()) most = std::max(most, n);
  config.n_per_prompt = most;
  return SourcePromptLibrary(lib.key_dim(), lib.prefix_len(), lib.model_dim(),
                             std::vector<PromptEmbedding>(lib.embeddings().begin(), lib.embeddings().end()),
                             std::vector<LibraryEntry>(lib.entries().begin(), lib.entries().end()), config);
}

// ---- Key files ----

namespace {

std::vector<KeyRecord> ReadKeys(const std::filesystem::path& path, ValidationReport* collect) {
  std::vector<KeyRecord> records;
  std::optional<std::size_t> dim;
  ForEachJsonLine(path, [&](std::uint64_t line, const OrderedJson& obj) {
    KeyRecord rec;
    if (obj.contains("embedding_id")) {
      rec.owner_id = RequireString(obj, "embedding_id", line);
    } else if (obj.contains("instance_id")) {
      rec.owner_id = RequireString(obj, "instance_id", line);
      rec.is_instance = true;
    } else {
      throw FormatError(FormatErrc::kBadField,
                        path.string() + ":" + std::to_string(line) + ": needs 'embedding_id' or 'instance_id'", line);
    }
    for (double v : RequireNumberArray(obj, "key", line)) {
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) {
        throw FormatError(FormatErrc::kNonFinite, path.string() + ":" + std::to_string(line) + ": non-finite key value",
                          line);
      }
      rec.key.push_back(f);
    }
    if (rec.key.empty()) throw FormatError(FormatErrc::kBadField, path.string() + ":" + std::to_string(line) + ": empty key", line);
    if (!dim) dim = rec.key.size();
    if (rec.key.size() != *dim) {
      throw FormatError(FormatErrc::kBadField,
                        path.string() + ":" + std::to_string(line) + ": key dimension " + std::to_string(rec.key.size()) +
                            ", expected " + std::to_string(*dim),
                        line);
    }
    records.push_back(std::move(rec));
  }, collect);
  return records;
}

}  // namespace

std::vector<KeyRecord> ReadKeyFile(const std::filesystem::path& path) { return ReadKeys(path, nullptr); }

void WriteKeyFile(const std::filesystem::path& path, std::span<const KeyRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += '{';
    AppendKey(out, r.is_instance ? "instance_id" : "embedding_id");
    AppendString(out, r.owner_id);
    out += ',';
    AppendKey(out, "key");
    AppendFloats(out, r.key);
    out += "}\n";
  }
  WriteTextFile(path, out);
}

ValidationReport ValidateKeyFile(const std::filesystem::path& path) {
  ValidationReport report;
  // Parse errors are reported once, by the reader below.
  ValidationReport parse_errors;
  try {
    ForEachJsonLine(path, [&](std::uint64_t line, const OrderedJson& obj) {
      ++report.records;
      const char* owner = obj.contains("embedding_id") ? "embedding_id" : "instance_id";
      CheckFieldOrder(obj, {owner, "key"}, line, report);
    }, &parse_errors);
    const auto records = ReadKeys(path, &report);
    if (records.empty()) report.warnings.push_back("file holds no key records");
  } catch (const FormatError& ex) {
    report.errors.push_back(ex.what());
  }
  return report;
}

KeyedInstances GroupByEmbedding(std::span<const KeyRecord> records) {
  KeyedInstances grouped;
  for (const auto& r : records) {
    if (r.is_instance) throw ValidationError("key record '" + r.owner_id + "' is a task instance, not a library instance");
    grouped[r.owner_id].push_back(r.key);
  }
  return grouped;
}

// ---- Embedding files ----

namespace {

std::vector<PromptEmbedding> ReadEmbeddings(const std::filesystem::path& path, ValidationReport* collect) {
  std::vector<PromptEmbedding> out;
  ForEachJsonLine(path, [&](std::uint64_t line, const OrderedJson& obj) {
    PromptEmbedding e;
    e.id = RequireString(obj, "id", line);
    try {
      e.metadata = MetadataFromJson(Json::parse(RequireField(obj, "metadata", line).dump()));
    } catch (const FormatError& ex) {
      throw FormatError(FormatErrc::kBadMetadata, path.string() + ":" + std::to_string(line) + ": " + ex.what(), line);
    }
    const auto& rows = RequireField(obj, "prefix_len", line);
    const auto& cols = RequireField(obj, "model_dim", line);
    if (!rows.is_number_unsigned() || !cols.is_number_unsigned()) {
      throw FormatError(FormatErrc::kBadField, path.string() + ":" + std::to_string(line) + ": bad matrix shape", line);
    }
    std::vector<float> values;
    for (double v : RequireNumberArray(obj, "matrix", line)) {
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) {
        throw FormatError(FormatErrc::kNonFinite,
                          path.string() + ":" + std::to_string(line) + ": non-finite matrix value", line);
      }
      values.push_back(f);
    }
    try {
      e.matrix = PromptMatrix(rows.get<std::uint32_t>(), cols.get<std::uint32_t>(), std::move(values));
    } catch (const ValidationError& ex) {
      throw FormatError(FormatErrc::kBadField, path.string() + ":" + std::to_string(line) + ": " + ex.what(), line);
    }
    out.push_back(std::move(e));
  }, collect);
  return out;
}

}  // namespace

std::vector<PromptEmbedding> ReadEmbeddingFile(const std::filesystem::path& path) { return ReadEmbeddings(path, nullptr); }

void WriteEmbeddingFile(const std::filesystem::path& path, std::span<const PromptEmbedding> embeddings) {
  std::string out;
  for (const auto& e : embeddings) {
    out += '{';
    AppendKey(out, "id");
    AppendString(out, e.id);
    out += ',';
    AppendKey(out, "metadata");
    out += MetadataToJson(e.metadata);
    out += ',';
    AppendKey(out, "prefix_len");
    out += std::to_string(e.matrix.rows());
    out += ',';
    AppendKey(out, "model_dim");
    out += std::to_string(e.matrix.cols());
    out += ',';
    AppendKey(out, "matrix");
    AppendFloats(out, e.matrix.values());
    out += "}\n";
  }
  WriteTextFile(path, out);
}

ValidationReport ValidateEmbeddingFile(const std::filesystem::path& path) {
  ValidationReport report;
  // Parse errors are reported once, by the reader below.
  ValidationReport parse_errors;
  try {
    ForEachJsonLine(path, [&](std::uint64_t line, const OrderedJson& obj) {
      ++report.records;
      CheckFieldOrder(obj, {"id", "metadata", "prefix_len", "model_dim", "matrix"}, line, report);
    }, &parse_errors);
    const auto embeddings = ReadEmbeddings(path, &report);
    std::vector<std::string> ids;
    for (const auto& e : embeddings) ids.push_back(e.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) report.errors.push_back("duplicate embedding ids");
    for (const auto& e : embeddings) {
      if (e.matrix.rows() != embeddings.front().matrix.rows() || e.matrix.cols() != embeddings.front().matrix.cols()) {
        report.errors.push_back("embedding '" + e.id + "' shape differs from the first embedding");
      }
    }
    if (embeddings.empty()) report.warnings.push_back("file holds no embeddings");
  } catch (const FormatError& ex) {
    report.errors.push_back(ex.what());
  }
  return report;
}

}  // namespace sprl
