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

#include "abpipe/stats/two_sample.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <vector>

#include <fmt/format.h>
#include "abpipe/common/status_macros.h"
#include "abpipe/stats/distributions.h"

namespace abpipe::stats {
namespace {

absl::Status CheckSample(std::span<const double> values, char name, size_t min_size) {
  if (values.size() < min_size) {
    return absl::InvalidArgumentError(fmt::format("sample {} needs at least {} value{}, got {}",
                                                  name, min_size, min_size == 1 ? "" : "s",
                                                  values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError(fmt::format("sample {} has a non-finite value", name));
    }
  }
  return absl::OkStatus();
}

struct RankedPool {
  // Doubled midranks, integral under ties.
  std::vector<int64_t> doubled_ranks;
  std::vector<bool> from_b;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  bool all_tied = false;
};

RankedPool RankPool(std::span<const double> a, std::span<const double> b) {
  const size_t n = a.size() + b.size();
  std::vector<std::pair<double, bool>> pool;
  pool.reserve(n);
  for (double v : a) pool.emplace_back(v, false);
  for (double v : b) pool.emplace_back(v, true);
  std::sort(pool.begin(), pool.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });

  RankedPool ranked;
  ranked.doubled_ranks.resize(n);
  ranked.from_b.resize(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && pool[j + 1].first == pool[i].first) ++j;
    // Ranks i+1 .. j+1 share the midrank (i + j + 2) / 2.
    const int64_t doubled = static_cast<int64_t>(i + j + 2);
    for (size_t k = i; k <= j; ++k) {
      ranked.doubled_ranks[k] = doubled;
      ranked.from_b[k] = pool[k].second;
    }
    const double t = static_cast<double>(j - i + 1);
    ranked.tie_term += t * t * t - t;
    if (j - i + 1 == n) ranked.all_tied = true;
    i = j + 1;
  }
  return ranked;
}

// P(|S - E[S]| >= |s_obs - E[S]|) where S is the doubled rank sum of a random
// size-`nb` subset of the pool.
double ExactRankSumPValue(const std::vector<int64_t>& doubled_ranks, size_t nb,
                          int64_t observed) {
  const size_t n = doubled_ranks.size();
  const int64_t max_sum =
      std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), int64_t{0});
  // ways[k][s]: subsets of size k with doubled rank sum s. Counts stay below
  // C(40, 20) < 2^53, so doubles hold them exactly.
  std::vector<std::vector<double>> ways(
      nb + 1, std::vector<double>(static_cast<size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (size_t item = 0; item < n; ++item) {
    const int64_t r = doubled_ranks[item];
    for (size_t k = std::min(nb, item + 1); k >= 1; --k) {
      std::vector<double>& row = ways[k];
      const std::vector<double>& prev = ways[k - 1];
      for (int64_t s = max_sum; s >= r; --s) {
        row[static_cast<size_t>(s)] += prev[static_cast<size_t>(s - r)];
      }
    }
  }
  // E[doubled S] = nb (n + 1), integral.
  const int64_t centre = static_cast<int64_t>(nb * (n + 1));
  const int64_t observed_dev = std::llabs(observed - centre);
  double extreme = 0.0;
  double total = 0.0;
  for (int64_t s = 0; s <= max_sum; ++s) {
    const double count = ways[nb][static_cast<size_t>(s)];
    if (count == 0.0) continue;
    total += count;
    if (std::llabs(s - centre) >= observed_dev) extreme += count;
  }
  return std::min(1.0, extreme / total);
}

}  // namespace

absl::StatusOr<WelchResult> WelchTTest(const RunningStats& a, const RunningStats& b) {
  if (a.count() < 2 || b.count() < 2) {
    return absl::InvalidArgumentError(
        fmt::format("Welch's t-test needs at least 2 values per sample, got {} and {}",
                    a.count(), b.count()));
  }
  const double na = static_cast<double>(a.count());
  const double nb = static_cast<double>(b.count());
  const double va = a.variance() / na;
  const double vb = b.variance() / nb;
  const double se2 = va + vb;
  const double diff = a.mean() - b.mean();

  WelchResult result;
  if (se2 == 0.0) {
    result.degenerate = true;
    result.df = na + nb - 2.0;
    if (diff == 0.0) {
      result.t = 0.0;
      result.p = 1.0;
    } else {
      result.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
      result.p = 0.0;
    }
    return result;
  }
  result.t = diff / std::sqrt(se2);
  result.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  result.p = StudentTTwoSidedPValue(result.t, result.df);
  return result;
}

absl::StatusOr<WelchResult> WelchTTest(std::span<const double> a,
                                       std::span<const double> b) {
  ABPIPE_RETURN_IF_ERROR(CheckSample(a, 'a', 2));
  ABPIPE_RETURN_IF_ERROR(CheckSample(b, 'b', 2));
  return WelchTTest(RunningStats(a), RunningStats(b));
}

absl::StatusOr<MannWhitneyResult> MannWhitneyU(std::span<const double> a,
                                               std::span<const double> b) {
  ABPIPE_RETURN_IF_ERROR(CheckSample(a, 'a', 1));
  ABPIPE_RETURN_IF_ERROR(CheckSample(b, 'b', 1));
  const RankedPool ranked = RankPool(a, b);
  const size_t na = a.size();
  const size_t nb = b.size();
  const size_t n = na + nb;

  int64_t doubled_rank_sum_b = 0;
  for (size_t i = 0; i < n; ++i) {
    if (ranked.from_b[i]) doubled_rank_sum_b += ranked.doubled_ranks[i];
  }
  MannWhitneyResult result;
  const int64_t doubled_min = static_cast<int64_t>(nb * (nb + 1));
  result.u = static_cast<double>(doubled_rank_sum_b - doubled_min) / 2.0;

  const double nanb = static_cast<double>(na) * static_cast<double>(nb);
  if (ranked.all_tied) {
    result.degenerate = true;
    result.p = 1.0;
    return result;
  }
  if (na <= kMannWhitneyExactLimit && nb <= kMannWhitneyExactLimit) {
    result.exact = true;
    result.p = ExactRankSumPValue(ranked.doubled_ranks, nb, doubled_rank_sum_b);
    return result;
  }
  const double nd = static_cast<double>(n);
  const double variance =
      nanb / 12.0 * ((nd + 1.0) - ranked.tie_term / (nd * (nd - 1.0)));
  const double z =
      std::max(0.0, std::fabs(result.u - nanb / 2.0) - 0.5) / std::sqrt(variance);
  result.p = NormalTwoSidedPValue(z);
  return result;
}

}  // namespace abpipe::stats
