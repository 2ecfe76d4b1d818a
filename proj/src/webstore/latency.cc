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

#include "abpipe/webstore/latency.h"

#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace abpipe::webstore {

double StandardNormal(StreamRng& rng) {
  // 1 - U keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.NextUniform();
  const double u2 = rng.NextUniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

absl::StatusOr<LatencySampler> LatencySampler::Create(const spec::LatencyModel& model) {
  switch (model.distribution) {
    case spec::LatencyDistribution::kLognormal:
      if (model.params.size() != 2 || !std::isfinite(model.params[0]) ||
          !std::isfinite(model.params[1]) || model.params[1] < 0 ||
          model.params[0] + 8 * model.params[1] > 700) {
        return absl::InvalidArgumentError(
            "lognormal latency needs finite [mu, sigma] with sigma >= 0");
      }
      return LatencySampler(model.distribution, model.params[0], model.params[1]);
    case spec::LatencyDistribution::kConstant:
      if (model.params.size() != 1 || !std::isfinite(model.params[0]) ||
          model.params[0] <= 0) {
        return absl::InvalidArgumentError("constant latency needs one positive value");
      }
      return LatencySampler(model.distribution, model.params[0], 0.0);
  }
  return absl::InvalidArgumentError("unknown latency distribution");
}

double LatencySampler::Sample(StreamRng& rng) const {
  if (distribution_ == spec::LatencyDistribution::kConstant) return a_;
  const double draw = std::exp(a_ + b_ * StandardNormal(rng));
  return draw > 0 ? draw : std::numeric_limits<double>::min();
}

double LatencySampler::Mean() const {
  if (distribution_ == spec::LatencyDistribution::kConstant) return a_;
  return std::exp(a_ + b_ * b_ / 2);
}

}  // namespace abpipe::webstore
