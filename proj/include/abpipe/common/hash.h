// Copyright 2026 The abpipe Authors.
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

#ifndef ABPIPE_COMMON_HASH_H_
#define ABPIPE_COMMON_HASH_H_

#include <cstdint>
#include <string_view>

namespace abpipe {

// Stable 64-bit hashing for variant assignment and stream derivation:
// FNV-1a over bytes, the SplitMix64 finalizer for mixing. Output is the same
// on every platform.

inline constexpr uint64_t Fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr uint64_t HashCombine(uint64_t seed, uint64_t value) {
  return Mix64(seed ^ Mix64(value));
}

inline constexpr uint64_t HashCombine(uint64_t seed, std::string_view value) {
  return HashCombine(seed, Fnv1a64(value));
}

template <typename T, typename... Rest>
  requires(sizeof...(Rest) > 0)
constexpr uint64_t HashCombine(uint64_t seed, const T& first,
                               const Rest&... rest) {
  return HashCombine(HashCombine(seed, first), rest...);
}

}  // namespace abpipe

#endif  // ABPIPE_COMMON_HASH_H_
