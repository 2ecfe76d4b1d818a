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

#ifndef ABPIPE_STATS_EVALUATION_H_
#define ABPIPE_STATS_EVALUATION_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "abpipe/common/request.h"
#include "abpipe/spec/metric.h"
#include "abpipe/spec/types.h"

namespace abpipe::stats {

enum class Decision { kReject, kInconclusive };

std::string_view DecisionName(Decision decision);

struct TestOutcome {
  std::string experiment_id;
  spec::TestType test_type = spec::TestType::kWelchT;
  double statistic = 0.0;  // t or U
  std::optional<double> degrees_of_freedom;  // Welch only
  double p_value = 1.0;
  double threshold = 0.0;
  Decision decision = Decision::kInconclusive;
  std::string resulting_variable;
  bool degenerate = false;
  // Values actually handed to the test for each hypothesis metric.
  int64_t samples_a = 0;
  int64_t samples_b = 0;

  bool operator==(const TestOutcome&) const = default;
};

using SeriesMap = std::map<std::string, std::vector<double>, std::less<>>;

// Runs the experiment's test on the first `spec.samples` values of the two
// hypothesis metrics. The decision is "reject" iff p < spec pValue.
absl::StatusOr<TestOutcome> EvaluateExperiment(const spec::ExperimentSpec& spec,
                                               const SeriesMap& series);

// Variable bindings visible to transition-rule conditions.
using Value = std::variant<std::string, double>;
using Bindings = std::map<std::string, Value, std::less<>>;

// ==/!= on a string literal compare strings; numeric literals compare
// numerically. Unbound variables and string/number mismatches are errors.
absl::StatusOr<bool> EvaluateCondition(const spec::Condition& condition,
                                       const Bindings& bindings);

// Value of a metric kind for one request, or nullopt if the record does not
// carry it (e.g. no outcome for click metrics).
std::optional<double> ExtractMetric(spec::MetricKind kind, const RequestRecord& record);

}  // namespace abpipe::stats

#endif  // ABPIPE_STATS_EVALUATION_H_
