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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sprl/jsonl.h"
#include "sprl/prompt_library.h"

namespace sprl {

inline constexpr char kLibraryMagic[4] = {'S', 'P', 'L', 'B'};
inline constexpr std::uint32_t kLibraryVersion = 1;

// Binary library layout, all integers and floats little-endian:
//
//   "SPLB" u32 version u32 key_dim u32 prefix_len u32 model_dim
//   u32 embedding_count u64 entry_count
//   embedding_count x { u32 len, id bytes, u32 len, metadata JSON bytes,
//                       prefix_len*model_dim f32 (row-major) }
//   entry_count x { u32 embedding ordinal, key_dim f32 }
//
// Build config lives in a JSON manifest next to the binary ("<path>.manifest.json").
std::vector<std::uint8_t> SerializeLibrary(const SourcePromptLibrary& library);

// Throws FormatError: kBadMagic / kUnsupportedVersion name found vs expected,
// kTruncated carries the byte offset where data ran out.
SourcePromptLibrary DeserializeLibrary(std::span<const std::uint8_t> bytes, const LibraryConfig& config = {});

std::filesystem::path ManifestPath(const std::filesystem::path& library_path);
OrderedJson LibraryManifest(const SourcePromptLibrary& library);
LibraryConfig ParseManifestConfig(const Json& manifest);

void SaveLibrary(const SourcePromptLibrary& library, const std::filesystem::path& path);
// Reads the manifest when present; otherwise the config is reconstructed
// with default sampling settings.
SourcePromptLibrary LoadLibrary(const std::filesystem::path& path);

std::string MetadataToJson(const PromptMetadata& metadata);
PromptMetadata MetadataFromJson(const Json& j);

// ---- Key files (JSON lines) ----
// {"embedding_id": "...", "key": [...]} for library instances, or
// {"instance_id": "...", "key": [...]} for query / task instances.
struct KeyRecord {
  std::string owner_id;
  bool is_instance = false;
  KeyVector key;
};

std::vector<KeyRecord> ReadKeyFile(const std::filesystem::path& path);
void WriteKeyFile(const std::filesystem::path& path, std::span<const KeyRecord> records);
ValidationReport ValidateKeyFile(const std::filesystem::path& path);
KeyedInstances GroupByEmbedding(std::span<const KeyRecord> records);

// ---- Embedding files (JSON lines) ----
// {"id", "metadata": {...}, "prefix_len", "model_dim", "matrix": [row-major]}
std::vector<PromptEmbedding> ReadEmbeddingFile(const std::filesystem::path& path);
void WriteEmbeddingFile(const std::filesystem::path& path, std::span<const PromptEmbedding> embeddings);
ValidationReport ValidateEmbeddingFile(const std::filesystem::path& path);

}  // namespace sprl
