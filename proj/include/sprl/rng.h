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
#include <random>
#include <string_view>

namespace sprl {

// Seeded generator whose derived draws are identical across standard
// library implementations. std::mt19937_64 is fully specified; the
// <random> distributions are not, so the few we need live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Next() { return engine_(); }

  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t UniformIndex(std::uint64_t bound);

  // Double in [0, 1) with 53 random bits.
  double Uniform01();

  // Standard normal draw (Box-Muller, one value per call).
  double Normal();

 private:
  std::mt19937_64 engine_;
};

// Stateless mixing helpers for deriving sub-seeds and hash-addressed values.
std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t HashString(std::string_view s);
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t MixSeed(std::uint64_t seed, std::string_view salt);
// Maps a 64-bit hash to a double in [0, 1).
double HashToUnit(std::uint64_t h);

}  // namespace sprl
