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

#ifndef ABPIPE_STATS_TWO_SAMPLE_H_
#define ABPIPE_STATS_TWO_SAMPLE_H_

#include <span>

#include "absl/status/statusor.h"
#include "abpipe/stats/running_stats.h"

namespace abpipe::stats {

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
  // Both variances are zero: t is 0 (equal means, p = 1) or +-inf (p = 0).
  bool degenerate = false;
};

// Welch's unequal-variance t-test of mean(a) == mean(b). Requires at least
// two finite values per side.
absl::StatusOr<WelchResult> WelchTTest(std::span<const double> a,
                                       std::span<const double> b);
absl::StatusOr<WelchResult> WelchTTest(const RunningStats& a, const RunningStats& b);

struct MannWhitneyResult {
  // Pairs (x in a, y in b) with x < y, plus half the tied pairs.
  double u = 0.0;
  double p = 1.0;  // two-sided
  bool exact = false;
  // Every value identical across both samples.
  bool degenerate = false;
};

// Sizes up to this bound (both sides) use the exact permutation distribution
// of the rank sum, ties included; larger samples use the tie-corrected normal
// approximation with continuity correction. Needs one finite value per side.
inline constexpr int kMannWhitneyExactLimit = 20;

absl::StatusOr<MannWhitneyResult> MannWhitneyU(std::span<const double> a,
                                               std::span<const double> b);

}  // namespace abpipe::stats

#endif  // ABPIPE_STATS_TWO_SAMPLE_H_
