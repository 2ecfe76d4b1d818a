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

#ifndef ABPIPE_LOOP_KNOWLEDGE_H_
#define ABPIPE_LOOP_KNOWLEDGE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "absl/status/statusor.h"
#include "abpipe/common/sim_time.h"
#include "abpipe/stats/evaluation.h"

namespace abpipe::loop {

enum class EventKind {
  kSetupDeployed,
  kExperimentStarted,
  kSamplesProgress,
  kExperimentAnalyzed,
  kRuleFired,
  kPipelineEnded,
};

std::string_view EventKindName(EventKind kind);
absl::StatusOr<EventKind> ParseEventKind(std::string_view name);

struct PipelineEvent {
  uint64_t seq = 0;
  EventKind kind = EventKind::kSetupDeployed;
  SimTime timestamp;
  nlohmann::json payload;

  bool operator==(const PipelineEvent&) const = default;
};

// One visit of one experiment.
struct ExperimentRecord {
  std::string experiment_id;
  int visit = 0;  // 1-based count of visits to this experiment
  SimTime started_at;
  std::optional<SimTime> analyzed_at;
  std::optional<stats::TestOutcome> outcome;
  std::optional<std::string> fired_rule;
  std::optional<std::string> next;  // experiment id or "end"

  bool operator==(const ExperimentRecord&) const = default;
};

struct KnowledgeSnapshot {
  std::string pipeline_id;
  std::optional<std::string> current_experiment;
  stats::SeriesMap samples;
  stats::Bindings bindings;
  std::vector<ExperimentRecord> experiments;
  std::vector<PipelineEvent> trace;
};

// Shared state of the feedback loop. The loop is the only writer; readers
// take snapshots. Bindings only gain keys (a revisit rebinds the same key)
// and the trace is append-only.
class KnowledgeStore {
 public:
  using Subscriber = std::function<void(const PipelineEvent&)>;

  explicit KnowledgeStore(std::string pipeline_id) : pipeline_id_(std::move(pipeline_id)) {}

  // Subscribers run synchronously on the writer's thread, in order.
  void Subscribe(Subscriber subscriber);

  PipelineEvent Emit(EventKind kind, SimTime at, nlohmann::json payload);

  void BeginExperiment(std::string_view id, int visit, SimTime at,
                       const std::vector<std::string>& metrics);
  void EndExperiment();
  void AppendSamples(std::string_view metric, const std::vector<double>& values);
  void RecordOutcome(const stats::TestOutcome& outcome, SimTime at);
  void RecordTransition(std::string_view rule, std::string_view next);

  std::optional<std::string> current_experiment() const;
  size_t SampleCount(std::string_view metric) const;
  stats::SeriesMap samples() const;
  stats::Bindings bindings() const;
  KnowledgeSnapshot Snapshot() const;
  // Counts per metric of the current experiment.
  std::map<std::string, int64_t> SampleCounts() const;

 private:
  mutable std::mutex mu_;
  std::string pipeline_id_;
  std::optional<std::string> current_;
  stats::SeriesMap samples_;
  stats::Bindings bindings_;
  std::vector<ExperimentRecord> experiments_;
  std::vector<PipelineEvent> trace_;
  std::vector<Subscriber> subscribers_;
};

}  // namespace abpipe::loop

#endif  // ABPIPE_LOOP_KNOWLEDGE_H_
