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

#ifndef ABPIPE_API_SUMMARY_H_
#define ABPIPE_API_SUMMARY_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

namespace abpipe::api {

// Box-plot statistics. Quartiles interpolate linearly between closest ranks
// (h = (n - 1) p); whiskers reach the most extreme values within 1.5 IQR of
// the box.
struct BoxStats {
  int64_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  int64_t outliers = 0;

  bool operator==(const BoxStats&) const = default;
};

// `sorted` must be ascending and non-empty; 0 <= p <= 1.
double Quantile(std::span<const double> sorted, double p);

// Empty input has no summary.
std::optional<BoxStats> Summarize(std::span<const double> values);

struct LiveSummary {
  std::string run_id;
  uint64_t seq = 0;
  std::optional<std::string> experiment_id;
  // Keyed by variant name; a variant without samples is absent.
  std::map<std::string, BoxStats> per_variant;
};

nlohmann::json ToJson(const BoxStats& stats);
nlohmann::json ToJson(const LiveSummary& summary);

}  // namespace abpipe::api

#endif  // ABPIPE_API_SUMMARY_H_
