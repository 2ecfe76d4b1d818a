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

#ifndef ABPIPE_COMMON_RANDOM_H_
#define ABPIPE_COMMON_RANDOM_H_

#include <cstdint>
#include <limits>

#include "abpipe/common/hash.h"

namespace abpipe {

// SplitMix64 generator. Small state makes it cheap to derive one independent
// stream per simulated flow; satisfies UniformRandomBitGenerator so it plugs
// into the <random> distributions.
class StreamRng {
 public:
  using result_type = uint64_t;

  explicit StreamRng(uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double NextUniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool NextBernoulli(double p) { return NextUniform() < p; }

 private:
  uint64_t state_;
};

}  // namespace abpipe

#endif  // ABPIPE_COMMON_RANDOM_H_
