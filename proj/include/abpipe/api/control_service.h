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

#ifndef ABPIPE_API_CONTROL_SERVICE_H_
#define ABPIPE_API_CONTROL_SERVICE_H_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "abpipe/api/run_store.h"
#include "abpipe/api/summary.h"
#include "abpipe/loop/feedback_loop.h"
#include "abpipe/loop/knowledge.h"
#include "abpipe/loop/managed_system.h"
#include "abpipe/spec/catalog.h"

namespace abpipe::api {

struct ServiceOptions {
  // Runs are persisted under <out_dir>/<runId>/ when set, and runs found
  // there are restored on construction.
  std::optional<std::filesystem::path> out_dir;
  double time_scale = 1.0;
  loop::LoopOptions loop;
  size_t recent_events = 20;
};

struct RunStatusView {
  RunRecord record;
  std::optional<std::string> current_experiment;
  std::map<std::string, int64_t> samples_collected;
  std::vector<loop::PipelineEvent> recent_events;
};

nlohmann::json ToJson(const RunStatusView& view);

// Operator service over one simulated store. At most one run is active
// (loaded or running) at a time. Each run gets a fresh managed system.
class ControlService {
 public:
  explicit ControlService(ServiceOptions options = {});
  ~ControlService();

  ControlService(const ControlService&) = delete;
  ControlService& operator=(const ControlService&) = delete;

  // Replaces the catalog with the documents that loaded. Fails only when
  // `directory` is not a directory.
  absl::StatusOr<spec::ValidationReport> LoadCatalogs(const std::filesystem::path& directory);
  std::vector<spec::PipelineSpec> ListPipelines() const;

  // Creates a run in status loaded; LaunchRun starts its feedback loop.
  absl::StatusOr<std::string> PrepareRun(std::string_view pipeline_id, uint64_t seed,
                                         traffic::ClockMode clock);
  absl::Status LaunchRun(std::string_view run_id);
  absl::StatusOr<std::string> StartRun(std::string_view pipeline_id, uint64_t seed,
                                       traffic::ClockMode clock);

  absl::StatusOr<RunStatusView> GetStatus(std::string_view run_id) const;
  absl::StatusOr<LiveSummary> GetLiveSummary(std::string_view run_id);
  // Partial while the run is not finished.
  absl::StatusOr<loop::PipelineResult> GetResults(std::string_view run_id) const;
  absl::Status AbortRun(std::string_view run_id);
  // Blocks until the run is in a terminal status.
  absl::Status WaitForRun(std::string_view run_id, absl::Duration timeout);
  std::vector<RunRecord> ListRuns() const;

  // The store behind the probe, effector and store endpoints.
  std::shared_ptr<loop::ManagedSystem> system() const;
  std::optional<std::string> active_run() const;
  absl::Status DeploySetup(std::string_view setup_name);
  absl::Status RemoveSetup(std::string_view setup_name);

 private:
  struct Run {
    RunRecord record;
    spec::Catalog catalog;
    std::shared_ptr<loop::ManagedSystem> system;
    std::unique_ptr<loop::KnowledgeStore> knowledge;
    std::atomic<bool> abort{false};
    std::thread thread;
    std::optional<RunDirectory> dir;
    std::deque<loop::PipelineEvent> recent;
    uint64_t summary_seq = 0;
  };

  void Execute(Run* run);
  void Persist(Run& run);
  absl::StatusOr<Run*> Find(std::string_view run_id) const;
  absl::StatusOr<std::shared_ptr<loop::ManagedSystem>> NewSystem(traffic::ClockMode clock) const;
  void RestoreRuns();

  const ServiceOptions options_;

  mutable std::mutex mu_;
  std::condition_variable changed_;
  std::optional<spec::Catalog> catalog_;
  std::map<std::string, std::unique_ptr<Run>, std::less<>> runs_;
  std::shared_ptr<loop::ManagedSystem> system_;
  std::optional<std::string> active_;
  int next_run_ = 1;
};

}  // namespace abpipe::api

#endif  // ABPIPE_API_CONTROL_SERVICE_H_
