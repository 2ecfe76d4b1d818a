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

#include "abpipe/loop/knowledge.h"

#include <array>
#include <utility>

#include <fmt/format.h>

namespace abpipe::loop {
namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 6> kEventNames = {{
    {EventKind::kSetupDeployed, "setupDeployed"},
    {EventKind::kExperimentStarted, "experimentStarted"},
    {EventKind::kSamplesProgress, "samplesProgress"},
    {EventKind::kExperimentAnalyzed, "experimentAnalyzed"},
    {EventKind::kRuleFired, "ruleFired"},
    {EventKind::kPipelineEnded, "pipelineEnded"},
}};

}  // namespace

std::string_view EventKindName(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) return name;
  }
  return "?";
}

absl::StatusOr<EventKind> ParseEventKind(std::string_view name) {
  for (const auto& [k, n] : kEventNames) {
    if (n == name) return k;
  }
  return absl::InvalidArgumentError(fmt::format("unknown event kind: {}", name));
}

void KnowledgeStore::Subscribe(Subscriber subscriber) {
  std::lock_guard lock(mu_);
  subscribers_.push_back(std::move(subscriber));
}

PipelineEvent KnowledgeStore::Emit(EventKind kind, SimTime at, nlohmann::json payload) {
  PipelineEvent event;
  std::vector<Subscriber> subscribers;
  {
    std::lock_guard lock(mu_);
    trace_.push_back(PipelineEvent{trace_.size(), kind, at, std::move(payload)});
    event = trace_.back();
    subscribers = subscribers_;
  }
  for (const Subscriber& s : subscribers) s(event);
  return event;
}

void KnowledgeStore::BeginExperiment(std::string_view id, int visit, SimTime at,
                                     const std::vector<std::string>& metrics) {
  std::lock_guard lock(mu_);
  current_ = std::string(id);
  samples_.clear();
  for (const std::string& m : metrics) samples_[m];
  ExperimentRecord record;
  record.experiment_id = std::string(id);
  record.visit = visit;
  record.started_at = at;
  experiments_.push_back(std::move(record));
}

void KnowledgeStore::EndExperiment() {
  std::lock_guard lock(mu_);
  current_.reset();
}

void KnowledgeStore::AppendSamples(std::string_view metric, const std::vector<double>& values) {
  std::lock_guard lock(mu_);
  auto it = samples_.find(metric);
  if (it == samples_.end()) it = samples_.emplace(std::string(metric), std::vector<double>{}).first;
  it->second.insert(it->second.end(), values.begin(), values.end());
}

void KnowledgeStore::RecordOutcome(const stats::TestOutcome& outcome, SimTime at) {
  std::lock_guard lock(mu_);
  bindings_[outcome.resulting_variable] = std::string(stats::DecisionName(outcome.decision));
  if (!experiments_.empty()) {
    experiments_.back().outcome = outcome;
    experiments_.back().analyzed_at = at;
  }
}

void KnowledgeStore::RecordTransition(std::string_view rule, std::string_view next) {
  std::lock_guard lock(mu_);
  if (experiments_.empty()) return;
  if (!rule.empty()) experiments_.back().fired_rule = std::string(rule);
  experiments_.back().next = std::string(next);
}

std::optional<std::string> KnowledgeStore::current_experiment() const {
  std::lock_guard lock(mu_);
  return current_;
}

size_t KnowledgeStore::SampleCount(std::string_view metric) const {
  std::lock_guard lock(mu_);
  auto it = samples_.find(metric);
  return it == samples_.end() ? 0 : it->second.size();
}

stats::SeriesMap KnowledgeStore::samples() const {
  std::lock_guard lock(mu_);
  return samples_;
}

stats::Bindings KnowledgeStore::bindings() const {
  std::lock_guard lock(mu_);
  return bindings_;
}

std::map<std::string, int64_t> KnowledgeStore::SampleCounts() const {
  std::lock_guard lock(mu_);
  std::map<std::string, int64_t> counts;
  for (const auto& [metric, values] : samples_) {
    counts[metric] = static_cast<int64_t>(values.size());
  }
  return counts;
}

KnowledgeSnapshot KnowledgeStore::Snapshot() const {
  std::lock_guard lock(mu_);
  return KnowledgeSnapshot{pipeline_id_, current_, samples_, bindings_, experiments_, trace_};
}

}  // namespace abpipe::loop
