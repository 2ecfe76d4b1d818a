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

#ifndef ABPIPE_LOOP_RESULT_H_
#define ABPIPE_LOOP_RESULT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "absl/status/statusor.h"
#include "abpipe/loop/knowledge.h"
#include "abpipe/stats/evaluation.h"

namespace abpipe::loop {

enum class RunStatus { kLoaded, kRunning, kEnded, kAborted, kFailed };

std::string_view RunStatusName(RunStatus status);
absl::StatusOr<RunStatus> ParseRunStatus(std::string_view name);

inline constexpr char kEndReasonRule[] = "end-rule";
inline constexpr char kEndReasonNoMatchingRule[] = "no-matching-rule";

struct PipelineResult {
  std::string pipeline_id;
  uint64_t seed = 0;
  RunStatus status = RunStatus::kRunning;
  std::string end_reason;  // set when ended
  std::string diagnostic;  // set when aborted or failed
  // Experiments in visit order.
  std::vector<std::string> path;
  std::vector<ExperimentRecord> experiments;
  stats::Bindings bindings;
  std::vector<PipelineEvent> trace;
  std::vector<std::string> warnings;
  SimTime ended_at;
  // Set on results read while the run is still going.
  bool partial = false;

  bool operator==(const PipelineResult&) const = default;
};

// Deterministic encoding: only virtual timestamps, and non-finite numbers
// are written as the strings "inf", "-inf" and "nan".
nlohmann::json ToJson(const PipelineResult& result);
nlohmann::json ToJson(const stats::TestOutcome& outcome);
nlohmann::json ToJson(const PipelineEvent& event);
absl::StatusOr<PipelineResult> PipelineResultFromJson(const nlohmann::json& json);

// Canonical text of a result file.
std::string SerializeResult(const PipelineResult& result);

nlohmann::json NumberToJson(double value);
absl::StatusOr<double> NumberFromJson(const nlohmann::json& value);

}  // namespace abpipe::loop

#endif  // ABPIPE_LOOP_RESULT_H_
