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

#include "abpipe/loop/result.h"

#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>
#include "abpipe/common/status_macros.h"
#include "abpipe/spec/parse.h"
#include "abpipe/spec/types.h"

namespace abpipe::loop {
namespace {

constexpr std::array<std::pair<RunStatus, std::string_view>, 5> kStatusNames = {{
    {RunStatus::kLoaded, "loaded"},
    {RunStatus::kRunning, "running"},
    {RunStatus::kEnded, "ended"},
    {RunStatus::kAborted, "aborted"},
    {RunStatus::kFailed, "failed"},
}};

nlohmann::json OptionalTime(const std::optional<SimTime>& t) {
  return t ? nlohmann::json(t->nanos()) : nlohmann::json(nullptr);
}

nlohmann::json OptionalString(const std::optional<std::string>& s) {
  return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
}

absl::StatusOr<stats::TestOutcome> OutcomeFromJson(const nlohmann::json& j) {
  stats::TestOutcome o;
  o.experiment_id = j.at("experimentId").get<std::string>();
  absl::StatusOr<spec::TestType> type = spec::ParseTestType(j.at("testType").get<std::string>());
  if (!type.ok()) return type.status();
  o.test_type = *type;
  ABPIPE_ASSIGN_OR_RETURN(o.statistic, NumberFromJson(j.at("statistic")));
  if (!j.at("degreesOfFreedom").is_null()) {
    ABPIPE_ASSIGN_OR_RETURN(double df, NumberFromJson(j.at("degreesOfFreedom")));
    o.degrees_of_freedom = df;
  }
  ABPIPE_ASSIGN_OR_RETURN(o.p_value, NumberFromJson(j.at("pValue")));
  ABPIPE_ASSIGN_OR_RETURN(o.threshold, NumberFromJson(j.at("threshold")));
  const std::string decision = j.at("decision").get<std::string>();
  if (decision == "reject") {
    o.decision = stats::Decision::kReject;
  } else if (decision == "inconclusive") {
    o.decision = stats::Decision::kInconclusive;
  } else {
    return absl::InvalidArgumentError(fmt::format("unknown decision: {}", decision));
  }
  o.resulting_variable = j.at("resultingVariable").get<std::string>();
  o.degenerate = j.at("degenerate").get<bool>();
  o.samples_a = j.at("samplesA").get<int64_t>();
  o.samples_b = j.at("samplesB").get<int64_t>();
  return o;
}

absl::StatusOr<PipelineResult> ResultFromJson(const nlohmann::json& j) {
  PipelineResult r;
  r.pipeline_id = j.at("pipelineId").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  ABPIPE_ASSIGN_OR_RETURN(r.status, ParseRunStatus(j.at("status").get<std::string>()));
  r.end_reason = j.at("endReason").get<std::string>();
  r.diagnostic = j.at("diagnostic").get<std::string>();
  r.partial = j.at("partial").get<bool>();
  r.ended_at = SimTime::FromNanos(j.at("endedAtNs").get<int64_t>());
  r.path = j.at("path").get<std::vector<std::string>>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& [name, value] : j.at("bindings").items()) {
    if (value.is_string()) {
      r.bindings[name] = value.get<std::string>();
    } else {
      ABPIPE_ASSIGN_OR_RETURN(double number, NumberFromJson(value));
      r.bindings[name] = number;
    }
  }
  for (const nlohmann::json& e : j.at("experiments")) {
    ExperimentRecord record;
    record.experiment_id = e.at("experimentId").get<std::string>();
    record.visit = e.at("visit").get<int>();
    record.started_at = SimTime::FromNanos(e.at("startedAtNs").get<int64_t>());
    if (!e.at("analyzedAtNs").is_null()) {
      record.analyzed_at = SimTime::FromNanos(e.at("analyzedAtNs").get<int64_t>());
    }
    if (!e.at("outcome").is_null()) {
      ABPIPE_ASSIGN_OR_RETURN(record.outcome, OutcomeFromJson(e.at("outcome")));
    }
    if (!e.at("firedRule").is_null()) record.fired_rule = e.at("firedRule").get<std::string>();
    if (!e.at("next").is_null()) record.next = e.at("next").get<std::string>();
    r.experiments.push_back(std::move(record));
  }
  for (const nlohmann::json& e : j.at("trace")) {
    PipelineEvent event;
    event.seq = e.at("seq").get<uint64_t>();
    ABPIPE_ASSIGN_OR_RETURN(event.kind, ParseEventKind(e.at("kind").get<std::string>()));
    event.timestamp = SimTime::FromNanos(e.at("timeNs").get<int64_t>());
    event.payload = e.at("payload");
    r.trace.push_back(std::move(event));
  }
  return r;
}

}  // namespace

std::string_view RunStatusName(RunStatus status) {
  for (const auto& [s, name] : kStatusNames) {
    if (s == status) return name;
  }
  return "?";
}

absl::StatusOr<RunStatus> ParseRunStatus(std::string_view name) {
  for (const auto& [s, n] : kStatusNames) {
    if (n == name) return s;
  }
  return absl::InvalidArgumentError(fmt::format("unknown run status: {}", name));
}

nlohmann::json NumberToJson(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

absl::StatusOr<double> NumberFromJson(const nlohmann::json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  return absl::InvalidArgumentError(fmt::format("not a number: {}", value.dump()));
}

nlohmann::json ToJson(const stats::TestOutcome& o) {
  return {
      {"experimentId", o.experiment_id},
      {"testType", spec::TestTypeName(o.test_type)},
      {"statistic", NumberToJson(o.statistic)},
      {"degreesOfFreedom",
       o.degrees_of_freedom ? NumberToJson(*o.degrees_of_freedom) : nlohmann::json(nullptr)},
      {"pValue", NumberToJson(o.p_value)},
      {"threshold", NumberToJson(o.threshold)},
      {"decision", stats::DecisionName(o.decision)},
      {"resultingVariable", o.resulting_variable},
      {"degenerate", o.degenerate},
      {"samplesA", o.samples_a},
      {"samplesB", o.samples_b},
  };
}

nlohmann::json ToJson(const PipelineEvent& event) {
  return {{"seq", event.seq},
          {"kind", EventKindName(event.kind)},
          {"timeNs", event.timestamp.nanos()},
          {"payload", event.payload}};
}

nlohmann::json ToJson(const PipelineResult& r) {
  nlohmann::json bindings = nlohmann::json::object();
  for (const auto& [name, value] : r.bindings) {
    if (const auto* s = std::get_if<std::string>(&value)) {
      bindings[name] = *s;
    } else {
      bindings[name] = NumberToJson(std::get<double>(value));
    }
  }
  nlohmann::json experiments = nlohmann::json::array();
  for (const ExperimentRecord& e : r.experiments) {
    experiments.push_back({
        {"experimentId", e.experiment_id},
        {"visit", e.visit},
        {"startedAtNs", e.started_at.nanos()},
        {"analyzedAtNs", OptionalTime(e.analyzed_at)},
        {"outcome", e.outcome ? ToJson(*e.outcome) : nlohmann::json(nullptr)},
        {"firedRule", OptionalString(e.fired_rule)},
        {"next", OptionalString(e.next)},
    });
  }
  nlohmann::json trace = nlohmann::json::array();
  for (const PipelineEvent& event : r.trace) trace.push_back(ToJson(event));
  return {
      {"pipelineId", r.pipeline_id},
      {"seed", r.seed},
      {"status", RunStatusName(r.status)},
      {"endReason", r.end_reason},
      {"diagnostic", r.diagnostic},
      {"partial", r.partial},
      {"endedAtNs", r.ended_at.nanos()},
      {"path", r.path},
      {"experiments", std::move(experiments)},
      {"bindings", std::move(bindings)},
      {"warnings", r.warnings},
      {"trace", std::move(trace)},
  };
}

absl::StatusOr<PipelineResult> PipelineResultFromJson(const nlohmann::json& json) {
  try {
    return ResultFromJson(json);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(fmt::format("malformed result: {}", e.what()));
  }
}

std::string SerializeResult(const PipelineResult& result) {
  return ToJson(result).dump(2) + "\n";
}

}  // namespace abpipe::loop
