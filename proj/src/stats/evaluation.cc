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

#include "abpipe/stats/evaluation.h"

#include <cassert>
#include <span>

#include <fmt/format.h>
#include "absl/status/status.h"
#include "abpipe/stats/two_sample.h"

namespace abpipe::stats {
namespace {

absl::StatusOr<std::span<const double>> HypothesisSeries(const spec::ExperimentSpec& spec,
                                                         const SeriesMap& series,
                                                         const std::string& metric) {
  auto it = series.find(metric);
  if (it == series.end()) {
    return absl::FailedPreconditionError(
        fmt::format("{}: missing metric series {}", spec.id, metric));
  }
  if (it->second.size() < static_cast<size_t>(spec.samples)) {
    return absl::FailedPreconditionError(
        fmt::format("{}: insufficient samples for {}: {} < {}", spec.id, metric,
                    it->second.size(), spec.samples));
  }
  return std::span<const double>(it->second).first(static_cast<size_t>(spec.samples));
}

}  // namespace

std::string_view DecisionName(Decision decision) {
  return decision == Decision::kReject ? "reject" : "inconclusive";
}

absl::StatusOr<TestOutcome> EvaluateExperiment(const spec::ExperimentSpec& spec,
                                               const SeriesMap& series) {
  const spec::StatisticalTestSpec& test = spec.statistical_test;
  absl::StatusOr<std::span<const double>> a =
      HypothesisSeries(spec, series, test.left_metric);
  if (!a.ok()) return a.status();
  absl::StatusOr<std::span<const double>> b =
      HypothesisSeries(spec, series, test.right_metric);
  if (!b.ok()) return b.status();

  TestOutcome outcome;
  outcome.experiment_id = spec.id;
  outcome.test_type = test.type;
  outcome.threshold = test.p_value;
  outcome.resulting_variable = test.resulting_variable;
  outcome.samples_a = static_cast<int64_t>(a->size());
  outcome.samples_b = static_cast<int64_t>(b->size());

  switch (test.type) {
    case spec::TestType::kWelchT: {
      absl::StatusOr<WelchResult> welch = WelchTTest(*a, *b);
      if (!welch.ok()) return welch.status();
      outcome.statistic = welch->t;
      outcome.degrees_of_freedom = welch->df;
      outcome.p_value = welch->p;
      outcome.degenerate = welch->degenerate;
      break;
    }
    case spec::TestType::kMannWhitneyU: {
      absl::StatusOr<MannWhitneyResult> mwu = MannWhitneyU(*a, *b);
      if (!mwu.ok()) return mwu.status();
      outcome.statistic = mwu->u;
      outcome.p_value = mwu->p;
      outcome.degenerate = mwu->degenerate;
      break;
    }
  }
  outcome.decision =
      outcome.p_value < test.p_value ? Decision::kReject : Decision::kInconclusive;
  assert((outcome.decision == Decision::kReject) == (outcome.p_value < outcome.threshold));
  return outcome;
}

absl::StatusOr<bool> EvaluateCondition(const spec::Condition& condition,
                                       const Bindings& bindings) {
  auto it = bindings.find(condition.left_operand);
  if (it == bindings.end()) {
    return absl::FailedPreconditionError(
        fmt::format("unbound variable: {}", condition.left_operand));
  }
  const Value& bound = it->second;
  if (const auto* literal = std::get_if<std::string>(&condition.right_operand)) {
    const auto* value = std::get_if<std::string>(&bound);
    if (value == nullptr || spec::IsOrdering(condition.op)) {
      return absl::InvalidArgumentError(
          fmt::format("type mismatch: {} {} \"{}\"", condition.left_operand,
                      spec::OpToken(condition.op), *literal));
    }
    return condition.op == spec::ComparisonOp::kEq ? *value == *literal
                                                   : *value != *literal;
  }
  const double literal = std::get<double>(condition.right_operand);
  const auto* value = std::get_if<double>(&bound);
  if (value == nullptr) {
    return absl::InvalidArgumentError(
        fmt::format("type mismatch: {} is not numeric", condition.left_operand));
  }
  switch (condition.op) {
    case spec::ComparisonOp::kEq:
      return *value == literal;
    case spec::ComparisonOp::kNe:
      return *value != literal;
    case spec::ComparisonOp::kLt:
      return *value < literal;
    case spec::ComparisonOp::kLe:
      return *value <= literal;
    case spec::ComparisonOp::kGt:
      return *value > literal;
    case spec::ComparisonOp::kGe:
      return *value >= literal;
  }
  return false;
}

std::optional<double> ExtractMetric(spec::MetricKind kind, const RequestRecord& record) {
  switch (kind) {
    case spec::MetricKind::kResponseTime:
      return record.response_time_ms;
    case spec::MetricKind::kClicks:
      if (!record.outcome) return std::nullopt;
      return record.outcome->recommendation_clicked ? 1.0 : 0.0;
    case spec::MetricKind::kPurchases:
      if (!record.outcome) return std::nullopt;
      return (record.outcome->purchased ? 1.0 : 0.0) +
             (record.outcome->recommendation_purchased ? 1.0 : 0.0);
  }
  return std::nullopt;
}

}  // namespace abpipe::stats
