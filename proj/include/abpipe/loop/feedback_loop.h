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

#ifndef ABPIPE_LOOP_FEEDBACK_LOOP_H_
#define ABPIPE_LOOP_FEEDBACK_LOOP_H_

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/time/clock.h"
#include "absl/time/time.h"
#include "abpipe/loop/knowledge.h"
#include "abpipe/loop/managed_system.h"
#include "abpipe/loop/result.h"
#include "abpipe/spec/catalog.h"
#include "abpipe/spec/metric.h"
#include "abpipe/spec/pipeline.h"
#include "abpipe/stats/evaluation.h"
#include "abpipe/traffic/scheduler.h"

namespace abpipe::loop {

struct LoopOptions {
  // Virtual time between monitoring rounds.
  absl::Duration monitor_interval = absl::Milliseconds(500);
  int max_experiment_visits = 100;
  // Probe calls are retried on failure, sleeping (wall clock) between
  // attempts with the delay doubling from probe_backoff.
  int probe_attempts = 5;
  absl::Duration probe_backoff = absl::Milliseconds(20);
  std::function<void(absl::Duration)> sleep = [](absl::Duration d) { absl::SleepFor(d); };
  // Virtual time a hypothesis metric may go without new samples before the
  // run is aborted.
  absl::Duration stall_timeout = absl::Hours(1);
};

struct PlanDecision {
  std::string next;        // experiment id or "end"
  std::string fired_rule;  // empty when no rule matched
  std::vector<std::string> matched_rules;
};

// Seed of the synthetic traffic for one visit of one experiment.
uint64_t TrafficSeed(uint64_t run_seed, std::string_view experiment_id, int visit);

// The MAPE-K loop executing one pipeline against a managed system.
class FeedbackLoop {
 public:
  FeedbackLoop(const spec::ExecutablePipeline* pipeline, Probe* probe, Effector* effector,
               SimulationDriver* driver, KnowledgeStore* knowledge, uint64_t seed,
               LoopOptions options = {});

  // Deploys the setup, runs experiments until the pipeline ends, then removes
  // the setup. Setting `*abort` makes the run stop at the next round.
  PipelineResult Run(const std::atomic<bool>* abort = nullptr);

  // Individual stages.
  absl::Status StartExperiment(std::string_view experiment_id);
  absl::Status Monitor();
  absl::StatusOr<std::optional<stats::TestOutcome>> Analyze();
  absl::StatusOr<PlanDecision> Plan() const;
  // Starts the next experiment, or stops traffic for "end".
  absl::Status Execute(const PlanDecision& decision);

 private:
  struct Series {
    std::string name;
    spec::MetricRef ref;
  };
  struct Active {
    const spec::ResolvedExperiment* experiment = nullptr;
    int visit = 0;
    uint64_t epoch = 0;
    std::array<size_t, 2> since{};
    std::vector<Series> series;
    int progress_decile = 0;
    std::array<size_t, 2> hypothesis_counts{};
    SimTime last_growth;
  };

  template <typename T>
  absl::StatusOr<T> WithRetries(const std::function<absl::StatusOr<T>()>& call);
  void EmitProgress();
  PipelineResult Finish(RunStatus status, std::string reason_or_diagnostic);

  const spec::ExecutablePipeline* pipeline_;
  Probe* probe_;
  Effector* effector_;
  SimulationDriver* driver_;
  KnowledgeStore* knowledge_;
  uint64_t seed_;
  LoopOptions options_;

  std::optional<Active> active_;
  std::map<std::string, int> visits_;
  int total_visits_ = 0;
  std::vector<std::string> path_;
  std::vector<std::string> warnings_;
  bool deployed_ = false;
};

struct RunOptions {
  uint64_t seed = 1;
  traffic::ClockMode clock = traffic::ClockMode::kVirtual;
  double time_scale = 1.0;
  LoopOptions loop;
};

// Resolves `pipeline_id` in `catalog` and runs it on `system`. Resolution or
// deployment problems yield a failed result without running any experiment.
PipelineResult RunPipeline(const spec::Catalog& catalog, std::string_view pipeline_id,
                           ManagedSystem& system, KnowledgeStore& knowledge,
                           const RunOptions& options, const std::atomic<bool>* abort = nullptr);

// Same, on a fresh managed system.
PipelineResult RunPipeline(const spec::Catalog& catalog, std::string_view pipeline_id,
                           const RunOptions& options);

}  // namespace abpipe::loop

#endif  // ABPIPE_LOOP_FEEDBACK_LOOP_H_
