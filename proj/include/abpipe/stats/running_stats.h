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

#ifndef ABPIPE_STATS_RUNNING_STATS_H_
#define ABPIPE_STATS_RUNNING_STATS_H_

#include <cstdint>
#include <span>

namespace abpipe::stats {

// Welford's single-pass mean/variance accumulator. Single writer.
class RunningStats {
 public:
  RunningStats() = default;
  explicit RunningStats(std::span<const double> values) {
    for (double v : values) Add(v);
  }

  void Add(double value) {
    ++count_;
    const double delta = value - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (value - mean_);
  }

  int64_t count() const { return count_; }
  double mean() const { return mean_; }
  // Sample variance (n - 1 denominator); 0 for fewer than two values.
  double variance() const {
    return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
  }

 private:
  int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace abpipe::stats

#endif  // ABPIPE_STATS_RUNNING_STATS_H_
