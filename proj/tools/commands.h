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
#include <string>

namespace sprl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitFormat = 3;

struct BuildLibraryArgs {
  std::string keys;
  std::string embeddings;
  std::size_t n = 100;
  std::string method = "random";
  std::uint64_t seed = 0;
  std::string out;
};

struct RetrieveArgs {
  std::string library;
  std::string queries;
  std::size_t q = 32;
  std::size_t top_n = 10;
  std::uint64_t seed = 0;
  bool cosine = false;
  unsigned threads = 1;
  std::string out;
};

struct SelectArgs {
  std::string tally;
  std::string strategy = "freq";
  std::size_t n_prime = 3;
  std::string probes;
  std::string hard_prompt;
  std::string library;
  std::string out;
};

struct EvaluateArgs {
  std::string library;
  std::string task;
  std::string strategy = "freq";
  std::size_t q = 32;
  std::size_t top_n = 10;
  std::size_t n_prime = 3;
  std::uint64_t seed = 0;
  std::size_t seeds = 3;
  bool oracle = false;
  bool cosine = false;
  unsigned threads = 1;
  std::string report;
};

struct AblateArgs {
  std::string grid;
  std::string base;
  std::string out;
  std::string reports;
};

struct GenerateWorldArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct ValidateArgs {
  std::string kind;
  std::string file;
};

struct ReplayArgs {
  std::string fixture;
  std::string out;
};

void BuildLibraryCommand(const BuildLibraryArgs& args);
void RetrieveCommand(const RetrieveArgs& args);
void SelectCommand(const SelectArgs& args);
void EvaluateCommand(const EvaluateArgs& args);
void AblateCommand(const AblateArgs& args);
void GenerateWorldCommand(const GenerateWorldArgs& args);
// Returns kExitOk when the file passes, kExitFormat otherwise.
int ValidateCommand(const ValidateArgs& args);
void ReplayCommand(const ReplayArgs& args);

}  // namespace sprl::cli
