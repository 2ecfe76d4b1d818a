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

#ifndef ABPIPE_WEBSTORE_LATENCY_H_
#define ABPIPE_WEBSTORE_LATENCY_H_

#include "absl/status/statusor.h"
#include "abpipe/common/random.h"
#include "abpipe/spec/types.h"

namespace abpipe::webstore {

// Draws per-invocation latencies in milliseconds. Normal deviates come from
// Box-Muller over the stream's own bits.
class LatencySampler {
 public:
  // Fails on models that could yield non-positive or non-finite latencies.
  static absl::StatusOr<LatencySampler> Create(const spec::LatencyModel& model);

  double Sample(StreamRng& rng) const;

  // Expected value of a draw.
  double Mean() const;

 private:
  LatencySampler(spec::LatencyDistribution distribution, double a, double b)
      : distribution_(distribution), a_(a), b_(b) {}

  spec::LatencyDistribution distribution_;
  double a_;
  double b_;
};

double StandardNormal(StreamRng& rng);

}  // namespace abpipe::webstore

#endif  // ABPIPE_WEBSTORE_LATENCY_H_
