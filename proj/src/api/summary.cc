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

#include "abpipe/api/summary.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace abpipe::api {

double Quantile(std::span<const double> sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::optional<BoxStats> Summarize(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  BoxStats s;
  s.count = static_cast<int64_t>(sorted.size());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / static_cast<double>(sorted.size());
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = Quantile(sorted, 0.25);
  s.median = Quantile(sorted, 0.5);
  s.q3 = Quantile(sorted, 0.75);

  const double fence = 1.5 * (s.q3 - s.q1);
  const auto low = std::lower_bound(sorted.begin(), sorted.end(), s.q1 - fence);
  const auto high = std::upper_bound(sorted.begin(), sorted.end(), s.q3 + fence);
  s.whisker_low = *low;
  s.whisker_high = *(high - 1);
  s.outliers = (low - sorted.begin()) + (sorted.end() - high);
  return s;
}

nlohmann::json ToJson(const BoxStats& s) {
  return {{"count", s.count},
          {"mean", s.mean},
          {"min", s.min},
          {"max", s.max},
          {"q1", s.q1},
          {"median", s.median},
          {"q3", s.q3},
          {"whiskerLow", s.whisker_low},
          {"whiskerHigh", s.whisker_high},
          {"outliers", s.outliers}};
}

nlohmann::json ToJson(const LiveSummary& summary) {
  nlohmann::json per_variant = nlohmann::json::object();
  for (const auto& [variant, stats] : summary.per_variant) per_variant[variant] = ToJson(stats);
  return {{"runId", summary.run_id},
          {"seq", summary.seq},
          {"experimentId", summary.experiment_id ? nlohmann::json(*summary.experiment_id)
                                                 : nlohmann::json(nullptr)},
          {"metric", "ResponseTime"},
          {"perVariant", std::move(per_variant)}};
}

}  // namespace abpipe::api
