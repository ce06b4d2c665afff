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
#include <stdexcept>
#include <string>
#include <string_view>

namespace sprl {

// Bad arguments or inputs that violate a documented precondition.
// The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A probability/likelihood provider could not answer for some input.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FormatErrc : int {
  kIo = 1,
  kBadMagic = 2,
  kUnsupportedVersion = 3,
  kTruncated = 4,
  kBadMetadata = 5,
  kBadReference = 6,
  kNonFinite = 7,
  kTrailingBytes = 8,
  kBadJson = 9,
  kBadField = 10,
};

std::string_view FormatErrcName(FormatErrc code);

// Unreadable, corrupt, or malformed files. The CLI maps this to exit code 3.
class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrc code, const std::string& what, std::uint64_t offset = 0)
      : std::runtime_error(std::string(FormatErrcName(code)) + ": " + what), code_(code), offset_(offset) {}

  FormatErrc code() const noexcept { return code_; }
  // Byte offset (binary files) or 1-based line number (text files); 0 when unknown.
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  FormatErrc code_;
  std::uint64_t offset_;
};

inline std::string_view FormatErrcName(FormatErrc code) {
  switch (code) {
    case FormatErrc::kIo: return "E_IO";
    case FormatErrc::kBadMagic: return "E_BAD_MAGIC";
    case FormatErrc::kUnsupportedVersion: return "E_VERSION";
    case FormatErrc::kTruncated: return "E_TRUNCATED";
    case FormatErrc::kBadMetadata: return "E_METADATA";
    case FormatErrc::kBadReference: return "E_REFERENCE";
    case FormatErrc::kNonFinite: return "E_NON_FINITE";
    case FormatErrc::kTrailingBytes: return "E_TRAILING";
    case FormatErrc::kBadJson: return "E_JSON";
    case FormatErrc::kBadField: return "E_FIELD";
  }
  return "E_UNKNOWN";
}

}  // namespace sprl
