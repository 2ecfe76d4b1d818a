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

#include "abpipe/loop/feedback_loop.h"

#include <algorithm>
#include <utility>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include "abpipe/common/hash.h"

namespace abpipe::loop {
namespace {

size_t Slot(Variant v) { return v == Variant::kA ? 0 : 1; }

PipelineResult FailedResult(std::string_view pipeline_id, uint64_t seed,
                            KnowledgeStore& knowledge, SimTime now, std::string diagnostic) {
  knowledge.Emit(EventKind::kPipelineEnded, now,
                 {{"status", RunStatusName(RunStatus::kFailed)}, {"diagnostic", diagnostic}});
  PipelineResult result;
  result.pipeline_id = std::string(pipeline_id);
  result.seed = seed;
  result.status = RunStatus::kFailed;
  result.diagnostic = std::move(diagnostic);
  result.trace = knowledge.Snapshot().trace;
  result.ended_at = now;
  return result;
}

}  // namespace

uint64_t TrafficSeed(uint64_t run_seed, std::string_view experiment_id, int visit) {
  return HashCombine(run_seed, experiment_id, static_cast<uint64_t>(visit));
}

FeedbackLoop::FeedbackLoop(const spec::ExecutablePipeline* pipeline, Probe* probe,
                           Effector* effector, SimulationDriver* driver,
                           KnowledgeStore* knowledge, uint64_t seed, LoopOptions options)
    : pipeline_(pipeline),
      probe_(probe),
      effector_(effector),
      driver_(driver),
      knowledge_(knowledge),
      seed_(seed),
      options_(std::move(options)) {}

template <typename T>
absl::StatusOr<T> FeedbackLoop::WithRetries(const std::function<absl::StatusOr<T>()>& call) {
  absl::Duration delay = options_.probe_backoff;
  absl::Status last;
  for (int attempt = 0; attempt < std::max(1, options_.probe_attempts); ++attempt) {
    if (attempt > 0) {
      options_.sleep(delay);
      delay *= 2;
    }
    absl::StatusOr<T> result = call();
    if (result.ok()) return result;
    last = result.status();
    if (last.code() != absl::StatusCode::kUnavailable) return last;
  }
  return absl::UnavailableError(fmt::format("probe unreachable after {} attempts: {}",
                                            options_.probe_attempts,
                                            std::string(last.message())));
}

absl::Status FeedbackLoop::StartExperiment(std::string_view experiment_id) {
  const spec::ResolvedExperiment* experiment = pipeline_->FindExperiment(experiment_id);
  if (experiment == nullptr) {
    return absl::NotFoundError(fmt::format("unknown experiment: {}", experiment_id));
  }
  if (total_visits_ >= options_.max_experiment_visits) {
    return absl::ResourceExhaustedError(fmt::format(
        "experiment visit guard exceeded ({} visits)", options_.max_experiment_visits));
  }
  const int visit = ++visits_[std::string(experiment_id)];
  ++total_visits_;
  const spec::ExperimentSpec& spec = experiment->spec;
  const std::string& ab = experiment->ab_component;

  effector_->StopTraffic();
  if (absl::Status s = effector_->ClearAbComponentHistory(ab); !s.ok()) return s;
  if (absl::Status s =
          effector_->SetAbRouting(ab, spec.assignment.weight_a, spec.assignment.weight_b);
      !s.ok()) {
    return s;
  }
  if (absl::Status s = effector_->ActivateExperiment(ab, spec, seed_); !s.ok()) return s;
  absl::StatusOr<uint64_t> epoch = WithRetries<uint64_t>(
      [&]() { return probe_->GetHistoryEpoch(ab); });
  if (!epoch.ok()) return epoch.status();

  Active active;
  active.experiment = experiment;
  active.visit = visit;
  active.epoch = *epoch;
  active.last_growth = driver_->Now();
  std::vector<std::string> names = spec.metrics;
  // Response times are always collected.
  for (const char* extra : {"ResponseTime_A", "ResponseTime_B"}) {
    if (std::find(names.begin(), names.end(), extra) == names.end()) names.push_back(extra);
  }
  for (const std::string& name : names) {
    absl::StatusOr<spec::MetricRef> ref = spec::ParseMetricName(name);
    if (!ref.ok()) return ref.status();
    active.series.push_back({name, *ref});
  }
  knowledge_->BeginExperiment(spec.id, visit, driver_->Now(), names);

  const uint64_t traffic_seed = TrafficSeed(seed_, spec.id, visit);
  if (absl::Status s = effector_->SwitchTraffic(ab, experiment->profile, traffic_seed);
      !s.ok()) {
    return s;
  }
  active_ = std::move(active);
  path_.push_back(spec.id);
  knowledge_->Emit(EventKind::kExperimentStarted, driver_->Now(),
                   {{"experiment", spec.id},
                    {"visit", visit},
                    {"abComponent", ab},
                    {"variantA", spec.variant_a},
                    {"variantB", spec.variant_b},
                    {"weightA", spec.assignment.weight_a},
                    {"weightB", spec.assignment.weight_b},
                    {"samples", spec.samples},
                    {"userProfile", experiment->profile.id}});
  return absl::OkStatus();
}

absl::Status FeedbackLoop::Monitor() {
  if (!active_) return absl::FailedPreconditionError("no active experiment");
  Active& active = *active_;
  const std::string& ab = active.experiment->ab_component;

  absl::StatusOr<uint64_t> epoch =
      WithRetries<uint64_t>([&]() { return probe_->GetHistoryEpoch(ab); });
  if (!epoch.ok()) return epoch.status();
  if (*epoch != active.epoch) {
    return absl::AbortedError(
        fmt::format("history of {} was cleared outside the loop", ab));
  }

  std::map<std::string, std::vector<double>> batch;
  for (Variant v : {Variant::kA, Variant::kB}) {
    const size_t since = active.since[Slot(v)];
    absl::StatusOr<std::vector<RequestRecord>> records =
        WithRetries<std::vector<RequestRecord>>(
            [&]() { return probe_->GetRequestHistory(ab, v, since); });
    if (!records.ok()) return records.status();
    for (const RequestRecord& record : *records) {
      if (record.epoch != active.epoch) {
        return absl::AbortedError(fmt::format(
            "record from history epoch {} while expecting {}", record.epoch, active.epoch));
      }
      for (const Series& series : active.series) {
        if (series.ref.variant != v) continue;
        if (std::optional<double> value = stats::ExtractMetric(series.ref.kind, record)) {
          batch[series.name].push_back(*value);
        }
      }
    }
    active.since[Slot(v)] += records->size();
  }
  for (const auto& [name, values] : batch) knowledge_->AppendSamples(name, values);

  const spec::StatisticalTestSpec& test = active.experiment->spec.statistical_test;
  const std::array<size_t, 2> counts = {knowledge_->SampleCount(test.left_metric),
                                        knowledge_->SampleCount(test.right_metric)};
  const SimTime now = driver_->Now();
  if (counts != active.hypothesis_counts) {
    active.hypothesis_counts = counts;
    active.last_growth = now;
  } else if (now - active.last_growth > options_.stall_timeout) {
    return absl::DeadlineExceededError(fmt::format(
        "{}: no new samples for {} of virtual time", active.experiment->spec.id,
        absl::FormatDuration(options_.stall_timeout)));
  }
  EmitProgress();
  return absl::OkStatus();
}

void FeedbackLoop::EmitProgress() {
  Active& active = *active_;
  const auto budget = static_cast<size_t>(active.experiment->spec.samples);
  const size_t least = std::min(active.hypothesis_counts[0], active.hypothesis_counts[1]);
  const int decile = static_cast<int>(10 * std::min(least, budget) / budget);
  if (decile <= active.progress_decile) return;
  active.progress_decile = decile;
  knowledge_->Emit(EventKind::kSamplesProgress, driver_->Now(),
                   {{"experiment", active.experiment->spec.id},
                    {"visit", active.visit},
                    {"percent", decile * 10},
                    {"budget", budget},
                    {"counts", knowledge_->SampleCounts()}});
}

absl::StatusOr<std::optional<stats::TestOutcome>> FeedbackLoop::Analyze() {
  if (!active_) return absl::FailedPreconditionError("no active experiment");
  const spec::ExperimentSpec& spec = active_->experiment->spec;
  const auto budget = static_cast<size_t>(spec.samples);
  if (knowledge_->SampleCount(spec.statistical_test.left_metric) < budget ||
      knowledge_->SampleCount(spec.statistical_test.right_metric) < budget) {
    return std::nullopt;
  }
  absl::StatusOr<stats::TestOutcome> outcome =
      stats::EvaluateExperiment(spec, knowledge_->samples());
  if (!outcome.ok()) return outcome.status();
  knowledge_->RecordOutcome(*outcome, driver_->Now());
  knowledge_->Emit(EventKind::kExperimentAnalyzed, driver_->Now(),
                   {{"experiment", spec.id},
                    {"visit", active_->visit},
                    {"outcome", ToJson(*outcome)}});
  return std::optional<stats::TestOutcome>(*outcome);
}

absl::StatusOr<PlanDecision> FeedbackLoop::Plan() const {
  if (!active_) return absl::FailedPreconditionError("no active experiment");
  const std::string& current = active_->experiment->spec.id;
  const stats::Bindings bindings = knowledge_->bindings();
  PlanDecision decision;
  for (const spec::TransitionRule* rule : pipeline_->OutgoingRules(current)) {
    bool holds = true;
    for (const spec::Condition& condition : rule->conditions) {
      absl::StatusOr<bool> value = stats::EvaluateCondition(condition, bindings);
      if (!value.ok()) {
        return absl::Status(value.status().code(),
                            fmt::format("rule {}: {}", rule->id,
                                        std::string(value.status().message())));
      }
      holds = holds && *value;
    }
    if (holds) decision.matched_rules.push_back(rule->id);
  }
  if (decision.matched_rules.empty()) {
    decision.next = spec::kEndExperiment;
  } else {
    decision.fired_rule = decision.matched_rules.front();
    decision.next = pipeline_->FindRule(decision.fired_rule)->to_experiment;
  }
  return decision;
}

absl::Status FeedbackLoop::Execute(const PlanDecision& decision) {
  if (!active_) return absl::FailedPreconditionError("no active experiment");
  const std::string from = active_->experiment->spec.id;
  knowledge_->RecordTransition(decision.fired_rule, decision.next);
  if (decision.matched_rules.size() > 1) {
    warnings_.push_back(fmt::format("ambiguous transition from {}: rules {} all match; fired {}",
                                    from, fmt::join(decision.matched_rules, ", "),
                                    decision.fired_rule));
  }
  if (!decision.fired_rule.empty()) {
    knowledge_->Emit(EventKind::kRuleFired, driver_->Now(),
                     {{"rule", decision.fired_rule},
                      {"from", from},
                      {"to", decision.next},
                      {"matched", decision.matched_rules}});
  }
  if (decision.next == spec::kEndExperiment) {
    effector_->StopTraffic();
    knowledge_->EndExperiment();
    active_.reset();
    return absl::OkStatus();
  }
  return StartExperiment(decision.next);
}

PipelineResult FeedbackLoop::Finish(RunStatus status, std::string reason_or_diagnostic) {
  effector_->StopTraffic();
  knowledge_->EndExperiment();
  active_.reset();
  if (deployed_) {
    if (absl::Status s = effector_->RemoveSetup(pipeline_->setup().id); !s.ok()) {
      warnings_.push_back(fmt::format("remove setup: {}", std::string(s.message())));
    }
    deployed_ = false;
  }
  PipelineResult result;
  result.pipeline_id = pipeline_->id();
  result.seed = seed_;
  result.status = status;
  nlohmann::json payload = {{"status", RunStatusName(status)}};
  if (status == RunStatus::kEnded) {
    result.end_reason = std::move(reason_or_diagnostic);
    payload["endReason"] = result.end_reason;
  } else {
    result.diagnostic = std::move(reason_or_diagnostic);
    payload["diagnostic"] = result.diagnostic;
  }
  result.ended_at = driver_->Now();
  knowledge_->Emit(EventKind::kPipelineEnded, result.ended_at, std::move(payload));
  KnowledgeSnapshot snapshot = knowledge_->Snapshot();
  result.path = path_;
  result.experiments = std::move(snapshot.experiments);
  result.bindings = std::move(snapshot.bindings);
  result.trace = std::move(snapshot.trace);
  result.warnings = warnings_;
  return result;
}

PipelineResult FeedbackLoop::Run(const std::atomic<bool>* abort) {
  warnings_ = pipeline_->warnings();
  const std::string& setup = pipeline_->setup().id;
  if (absl::Status s = effector_->DeploySetup(setup); !s.ok()) {
    return Finish(RunStatus::kFailed,
                  fmt::format("deploy setup {}: {}", setup, std::string(s.message())));
  }
  deployed_ = true;
  knowledge_->Emit(EventKind::kSetupDeployed, driver_->Now(), {{"setup", setup}});
  if (absl::Status s = StartExperiment(pipeline_->start()); !s.ok()) {
    return Finish(RunStatus::kAborted, std::string(s.message()));
  }
  while (true) {
    if (abort != nullptr && abort->load()) {
      return Finish(RunStatus::kAborted, "aborted by operator");
    }
    driver_->Advance(options_.monitor_interval);
    if (absl::Status s = Monitor(); !s.ok()) {
      return Finish(RunStatus::kAborted, std::string(s.message()));
    }
    absl::StatusOr<std::optional<stats::TestOutcome>> outcome = Analyze();
    if (!outcome.ok()) return Finish(RunStatus::kAborted, std::string(outcome.status().message()));
    if (!outcome->has_value()) continue;
    absl::StatusOr<PlanDecision> decision = Plan();
    if (!decision.ok()) {
      return Finish(RunStatus::kAborted, std::string(decision.status().message()));
    }
    if (absl::Status s = Execute(*decision); !s.ok()) {
      return Finish(RunStatus::kAborted, std::string(s.message()));
    }
    if (decision->next == spec::kEndExperiment) {
      return Finish(RunStatus::kEnded,
                    decision->fired_rule.empty() ? kEndReasonNoMatchingRule : kEndReasonRule);
    }
  }
}

PipelineResult RunPipeline(const spec::Catalog& catalog, std::string_view pipeline_id,
                           ManagedSystem& system, KnowledgeStore& knowledge,
                           const RunOptions& options, const std::atomic<bool>* abort) {
  auto it = catalog.pipelines.find(std::string(pipeline_id));
  if (it == catalog.pipelines.end()) {
    return FailedResult(pipeline_id, options.seed, knowledge, system.Now(),
                        fmt::format("unknown pipeline: {}", pipeline_id));
  }
  absl::StatusOr<spec::ExecutablePipeline> pipeline = spec::ResolvePipeline(it->second, catalog);
  if (!pipeline.ok()) {
    return FailedResult(pipeline_id, options.seed, knowledge, system.Now(),
                        std::string(pipeline.status().message()));
  }
  system.SetSetupCatalog(catalog.setups);
  FeedbackLoop loop(&*pipeline, &system, &system, &system, &knowledge, options.seed,
                    options.loop);
  return loop.Run(abort);
}

PipelineResult RunPipeline(const spec::Catalog& catalog, std::string_view pipeline_id,
                           const RunOptions& options) {
  KnowledgeStore knowledge{std::string(pipeline_id)};
  absl::StatusOr<traffic::SimClock> clock =
      traffic::SimClock::Create(options.clock, options.time_scale);
  if (!clock.ok()) {
    return FailedResult(pipeline_id, options.seed, knowledge, SimTime(),
                        std::string(clock.status().message()));
  }
  ManagedSystem system(*clock);
  return RunPipeline(catalog, pipeline_id, system, knowledge, options);
}

}  // namespace abpipe::loop
