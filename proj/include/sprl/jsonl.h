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
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sprl {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// 17 significant digits: round-trips any double and satisfies the
// ">= 9 significant digits" rule of the table formats.
std::string FormatDouble(double value);

// Appends `"key":` to out.
void AppendKey(std::string& out, std::string_view key);
void AppendString(std::string& out, std::string_view value);
void AppendDoubles(std::string& out, std::span<const double> values);
void AppendFloats(std::string& out, std::span<const float> values);

// Outcome of a format validator: hard errors and advisory warnings.
struct ValidationReport {
  std::uint64_t records = 0;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

// Calls `fn(line_number, parsed_object)` for each non-blank line. Throws
// FormatError(kBadJson) with the 1-based line number on parse failure.
// With `collect`, a FormatError on a line (parse or thrown by fn) is recorded
// as "line N: ..." and the remaining lines are still visited.
void ForEachJsonLine(const std::filesystem::path& path,
                     const std::function<void(std::uint64_t, const OrderedJson&)>& fn,
                     ValidationReport* collect = nullptr);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

// Warns when an object's keys do not appear in exactly `expected` order.
void CheckFieldOrder(const OrderedJson& obj, std::initializer_list<std::string_view> expected, std::uint64_t line,
                     ValidationReport& report);

// Field accessors throwing FormatError(kBadField) with the line number.
const OrderedJson& RequireField(const OrderedJson& obj, std::string_view key, std::uint64_t line);
std::string RequireString(const OrderedJson& obj, std::string_view key, std::uint64_t line);
std::vector<double> RequireNumberArray(const OrderedJson& obj, std::string_view key, std::uint64_t line);

}  // namespace sprl
