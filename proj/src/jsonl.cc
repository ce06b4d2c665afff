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

#include "sprl/jsonl.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sprl/error.h"

namespace sprl {

std::string FormatDouble(double value) {
  if (!std::isfinite(value)) throw ValidationError("cannot serialize a non-finite value");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  std::string out(buf, res.ptr);
  // Keep a float-looking token so readers never narrow it to an integer.
  if (out.find_first_of(".eE") == std::string::npos) out += ".0";
  return out;
}

void AppendKey(std::string& out, std::string_view key) {
  AppendString(out, key);
  out += ':';
}

void AppendString(std::string& out, std::string_view value) { out += Json(std::string(value)).dump(); }

void AppendDoubles(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += FormatDouble(values[i]);
  }
  out += ']';
}

void AppendFloats(std::string& out, std::span<const float> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += FormatDouble(static_cast<double>(values[i]));
  }
  out += ']';
}

void ForEachJsonLine(const std::filesystem::path& path,
                     const std::function<void(std::uint64_t, const OrderedJson&)>& fn, ValidationReport* collect) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatErrc::kIo, "cannot open '" + path.string() + "'");
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      OrderedJson obj;
      try {
        obj = OrderedJson::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(FormatErrc::kBadJson, path.string() + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
      }
      if (!obj.is_object()) {
        throw FormatError(FormatErrc::kBadJson, path.string() + ":" + std::to_string(lineno) + ": expected an object",
                          lineno);
      }
      fn(lineno, obj);
    } catch (const FormatError& e) {
      if (collect == nullptr) throw;
      collect->errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::kIo, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FormatError(FormatErrc::kIo, "short write to '" + path.string() + "'");
}

void CheckFieldOrder(const OrderedJson& obj, std::initializer_list<std::string_view> expected, std::uint64_t line,
                     ValidationReport& report) {
  auto it = obj.begin();
  bool in_order = obj.size() == expected.size();
  for (auto key : expected) {
    if (!in_order || it == obj.end() || it.key() != key) {
      in_order = false;
      break;
    }
    ++it;
  }
  if (!in_order) {
    std::string want;
    for (auto key : expected) want += (want.empty() ? "" : ", ") + std::string(key);
    report.warnings.push_back("line " + std::to_string(line) + ": field order differs from {" + want + "}");
  }
}

const OrderedJson& RequireField(const OrderedJson& obj, std::string_view key, std::uint64_t line) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    throw FormatError(FormatErrc::kBadField, "line " + std::to_string(line) + ": missing field '" + std::string(key) + "'",
                      line);
  }
  return *it;
}

std::string RequireString(const OrderedJson& obj, std::string_view key, std::uint64_t line) {
  const auto& v = RequireField(obj, key, line);
  if (!v.is_string()) {
    throw FormatError(FormatErrc::kBadField, "line " + std::to_string(line) + ": field '" + std::string(key) +
                                                 "' must be a string",
                      line);
  }
  return v.get<std::string>();
}

std::vector<double> RequireNumberArray(const OrderedJson& obj, std::string_view key, std::uint64_t line) {
  const auto& v = RequireField(obj, key, line);
  if (!v.is_array()) {
    throw FormatError(FormatErrc::kBadField, "line " + std::to_string(line) + ": field '" + std::string(key) +
                                                 "' must be an array",
                      line);
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw FormatError(FormatErrc::kBadField, "line " + std::to_string(line) + ": field '" + std::string(key) +
                                                   "' must hold numbers",
                        line);
    }
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace sprl
