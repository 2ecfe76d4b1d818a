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

#include "abpipe/api/control_service.h"

#include <cstdio>
#include <utility>

#include <fmt/format.h>
#include "absl/time/clock.h"
#include "abpipe/common/status_macros.h"

namespace abpipe::api {
namespace {

using loop::RunStatus;

constexpr char kRunIdPrefix[] = "run-";

std::optional<int> RunNumber(std::string_view run_id) {
  if (!run_id.starts_with(kRunIdPrefix)) return std::nullopt;
  int n = 0;
  for (char c : run_id.substr(sizeof(kRunIdPrefix) - 1)) {
    if (c < '0' || c > '9') return std::nullopt;
    n = n * 10 + (c - '0');
  }
  return n;
}

}  // namespace

nlohmann::json ToJson(const RunStatusView& view) {
  nlohmann::json json = ToJson(view.record);
  json["currentExperiment"] =
      view.current_experiment ? nlohmann::json(*view.current_experiment) : nlohmann::json(nullptr);
  json["samplesCollected"] = view.samples_collected;
  nlohmann::json events = nlohmann::json::array();
  for (const loop::PipelineEvent& e : view.recent_events) events.push_back(loop::ToJson(e));
  json["recentEvents"] = std::move(events);
  return json;
}

ControlService::ControlService(ServiceOptions options) : options_(std::move(options)) {
  system_ = *NewSystem(traffic::ClockMode::kVirtual);
  if (options_.out_dir) RestoreRuns();
}

ControlService::~ControlService() {
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, run] : runs_) {
      run->abort = true;
      if (run->thread.joinable()) threads.push_back(std::move(run->thread));
    }
  }
  for (std::thread& t : threads) t.join();
}

void ControlService::RestoreRuns() {
  for (const std::filesystem::path& dir : ListRunDirectories(*options_.out_dir)) {
    absl::StatusOr<RunRecord> record = LoadRun(dir);
    if (!record.ok() || !IsTerminal(record->status) || !record->result) {
      std::fprintf(stderr, "skipping run directory %s\n", dir.string().c_str());
      continue;
    }
    auto run = std::make_unique<Run>();
    run->record = *std::move(record);
    if (std::optional<int> n = RunNumber(run->record.run_id); n && *n >= next_run_) {
      next_run_ = *n + 1;
    }
    runs_.emplace(run->record.run_id, std::move(run));
  }
}

absl::StatusOr<std::shared_ptr<loop::ManagedSystem>> ControlService::NewSystem(
    traffic::ClockMode clock) const {
  ABPIPE_ASSIGN_OR_RETURN(traffic::SimClock sim_clock,
                          traffic::SimClock::Create(clock, options_.time_scale));
  return std::make_shared<loop::ManagedSystem>(sim_clock);
}

absl::StatusOr<spec::ValidationReport> ControlService::LoadCatalogs(
    const std::filesystem::path& directory) {
  spec::ValidationReport report;
  ABPIPE_ASSIGN_OR_RETURN(spec::Catalog catalog, spec::LoadCatalogDirectory(directory, report));
  spec::ValidatePipelines(catalog, report);
  std::lock_guard lock(mu_);
  if (!active_) system_->SetSetupCatalog(catalog.setups);
  catalog_ = std::move(catalog);
  return report;
}

std::vector<spec::PipelineSpec> ControlService::ListPipelines() const {
  std::lock_guard lock(mu_);
  std::vector<spec::PipelineSpec> out;
  if (catalog_) {
    for (const auto& [id, pipeline] : catalog_->pipelines) out.push_back(pipeline);
  }
  return out;
}

absl::StatusOr<std::string> ControlService::PrepareRun(std::string_view pipeline_id,
                                                       uint64_t seed, traffic::ClockMode clock) {
  std::unique_lock lock(mu_);
  if (active_) return absl::FailedPreconditionError(fmt::format("run {} is active", *active_));
  if (!catalog_) return absl::FailedPreconditionError("no catalog loaded");
  auto it = catalog_->pipelines.find(std::string(pipeline_id));
  if (it == catalog_->pipelines.end()) {
    return absl::NotFoundError(fmt::format("unknown pipeline: {}", pipeline_id));
  }
  if (absl::StatusOr<spec::ExecutablePipeline> resolved = spec::ResolvePipeline(it->second, *catalog_);
      !resolved.ok()) {
    return absl::FailedPreconditionError(std::string(resolved.status().message()));
  }
  ABPIPE_ASSIGN_OR_RETURN(std::shared_ptr<loop::ManagedSystem> system, NewSystem(clock));
  system->SetSetupCatalog(catalog_->setups);

  auto run = std::make_unique<Run>();
  run->record.run_id = fmt::format("{}{:04}", kRunIdPrefix, next_run_);
  run->record.pipeline_id = std::string(pipeline_id);
  run->record.seed = seed;
  run->record.clock = clock;
  run->catalog = *catalog_;
  run->system = system;
  run->knowledge = std::make_unique<loop::KnowledgeStore>(std::string(pipeline_id));
  if (options_.out_dir) {
    ABPIPE_ASSIGN_OR_RETURN(run->dir, RunDirectory::Create(*options_.out_dir, run->record.run_id));
    ABPIPE_RETURN_IF_ERROR(run->dir->WriteCatalog(run->catalog));
    ABPIPE_RETURN_IF_ERROR(run->dir->WriteRecord(run->record));
  }
  Run* raw = run.get();
  raw->knowledge->Subscribe([this, raw](const loop::PipelineEvent& event) {
    std::lock_guard events_lock(mu_);
    raw->recent.push_back(event);
    while (raw->recent.size() > options_.recent_events) raw->recent.pop_front();
    if (raw->dir) {
      if (absl::Status s = raw->dir->AppendEvent(event); !s.ok()) {
        std::fprintf(stderr, "%s: %s\n", raw->record.run_id.c_str(),
                     std::string(s.message()).c_str());
      }
    }
  });

  ++next_run_;
  system_ = std::move(system);
  active_ = raw->record.run_id;
  std::string run_id = raw->record.run_id;
  runs_.emplace(run_id, std::move(run));
  return run_id;
}

absl::Status ControlService::LaunchRun(std::string_view run_id) {
  std::lock_guard lock(mu_);
  auto it = runs_.find(run_id);
  if (it == runs_.end()) return absl::NotFoundError(fmt::format("unknown run: {}", run_id));
  Run* run = it->second.get();
  if (run->record.status != RunStatus::kLoaded) {
    return absl::FailedPreconditionError(
        fmt::format("run {} is {}", run_id, loop::RunStatusName(run->record.status)));
  }
  run->record.status = RunStatus::kRunning;
  run->record.started_at = absl::Now();
  Persist(*run);
  changed_.notify_all();
  run->thread = std::thread([this, run] { Execute(run); });
  return absl::OkStatus();
}

absl::StatusOr<std::string> ControlService::StartRun(std::string_view pipeline_id, uint64_t seed,
                                                     traffic::ClockMode clock) {
  ABPIPE_ASSIGN_OR_RETURN(std::string run_id, PrepareRun(pipeline_id, seed, clock));
  ABPIPE_RETURN_IF_ERROR(LaunchRun(run_id));
  return run_id;
}

void ControlService::Execute(Run* run) {
  loop::RunOptions options;
  options.seed = run->record.seed;
  options.clock = run->record.clock;
  options.time_scale = options_.time_scale;
  options.loop = options_.loop;
  loop::PipelineResult result = loop::RunPipeline(run->catalog, run->record.pipeline_id,
                                                  *run->system, *run->knowledge, options,
                                                  &run->abort);
  std::lock_guard lock(mu_);
  run->record.status = result.status;
  run->record.ended_at = absl::Now();
  run->record.result = std::move(result);
  if (run->dir) {
    if (absl::Status s = run->dir->WriteResult(*run->record.result); !s.ok()) {
      std::fprintf(stderr, "%s: %s\n", run->record.run_id.c_str(),
                   std::string(s.message()).c_str());
    }
  }
  Persist(*run);
  if (active_ == run->record.run_id) active_.reset();
  changed_.notify_all();
}

// Requires mu_.
void ControlService::Persist(Run& run) {
  if (!run.dir) return;
  if (absl::Status s = run.dir->WriteRecord(run.record); !s.ok()) {
    std::fprintf(stderr, "%s: %s\n", run.record.run_id.c_str(), std::string(s.message()).c_str());
  }
}

absl::StatusOr<ControlService::Run*> ControlService::Find(std::string_view run_id) const {
  auto it = runs_.find(run_id);
  if (it == runs_.end()) return absl::NotFoundError(fmt::format("unknown run: {}", run_id));
  return it->second.get();
}

absl::StatusOr<RunStatusView> ControlService::GetStatus(std::string_view run_id) const {
  std::lock_guard lock(mu_);
  ABPIPE_ASSIGN_OR_RETURN(Run * run, Find(run_id));
  RunStatusView view;
  view.record = run->record;
  view.record.result.reset();
  view.recent_events.assign(run->recent.begin(), run->recent.end());
  if (run->knowledge) {
    view.current_experiment = run->knowledge->current_experiment();
    view.samples_collected = run->knowledge->SampleCounts();
  } else if (run->record.result) {
    const auto& trace = run->record.result->trace;
    const size_t n = std::min(trace.size(), options_.recent_events);
    view.recent_events.assign(trace.end() - static_cast<ptrdiff_t>(n), trace.end());
  }
  return view;
}

absl::StatusOr<LiveSummary> ControlService::GetLiveSummary(std::string_view run_id) {
  std::lock_guard lock(mu_);
  ABPIPE_ASSIGN_OR_RETURN(Run * run, Find(run_id));
  LiveSummary summary;
  summary.run_id = run->record.run_id;
  summary.seq = ++run->summary_seq;
  if (!run->knowledge) return summary;
  summary.experiment_id = run->knowledge->current_experiment();
  const stats::SeriesMap samples = run->knowledge->samples();
  for (Variant v : {Variant::kA, Variant::kB}) {
    auto it = samples.find(fmt::format("ResponseTime_{}", VariantName(v)));
    if (it == samples.end()) continue;
    if (std::optional<BoxStats> stats = Summarize(it->second)) {
      summary.per_variant.emplace(std::string(VariantName(v)), *stats);
    }
  }
  return summary;
}

absl::StatusOr<loop::PipelineResult> ControlService::GetResults(std::string_view run_id) const {
  std::lock_guard lock(mu_);
  ABPIPE_ASSIGN_OR_RETURN(Run * run, Find(run_id));
  if (run->record.result) return *run->record.result;

  loop::PipelineResult partial;
  partial.pipeline_id = run->record.pipeline_id;
  partial.seed = run->record.seed;
  partial.status = run->record.status;
  partial.partial = true;
  loop::KnowledgeSnapshot snapshot = run->knowledge->Snapshot();
  for (const loop::ExperimentRecord& e : snapshot.experiments) {
    partial.path.push_back(e.experiment_id);
  }
  partial.experiments = std::move(snapshot.experiments);
  partial.bindings = std::move(snapshot.bindings);
  partial.trace = std::move(snapshot.trace);
  if (!partial.trace.empty()) partial.ended_at = partial.trace.back().timestamp;
  return partial;
}

absl::Status ControlService::AbortRun(std::string_view run_id) {
  std::lock_guard lock(mu_);
  ABPIPE_ASSIGN_OR_RETURN(Run * run, Find(run_id));
  switch (run->record.status) {
    case RunStatus::kRunning:
      run->abort = true;
      return absl::OkStatus();
    case RunStatus::kAborted:
      return absl::OkStatus();
    default:
      return absl::FailedPreconditionError(
          fmt::format("run {} is {}", run_id, loop::RunStatusName(run->record.status)));
  }
}

absl::Status ControlService::WaitForRun(std::string_view run_id, absl::Duration timeout) {
  std::unique_lock lock(mu_);
  ABPIPE_ASSIGN_OR_RETURN(Run * run, Find(run_id));
  if (run->record.status == RunStatus::kLoaded) {
    return absl::FailedPreconditionError(fmt::format("run {} was not launched", run_id));
  }
  const bool done = changed_.wait_for(lock, absl::ToChronoNanoseconds(timeout), [run] {
    return IsTerminal(run->record.status);
  });
  if (!done) return absl::DeadlineExceededError(fmt::format("run {} still running", run_id));
  lock.unlock();
  // The worker has published its result; reap it.
  std::thread worker;
  {
    std::lock_guard relock(mu_);
    if (run->thread.joinable()) worker = std::move(run->thread);
  }
  if (worker.joinable()) worker.join();
  return absl::OkStatus();
}

std::vector<RunRecord> ControlService::ListRuns() const {
  std::lock_guard lock(mu_);
  std::vector<RunRecord> out;
  for (const auto& [id, run] : runs_) {
    out.push_back(run->record);
    out.back().result.reset();
  }
  return out;
}

std::shared_ptr<loop::ManagedSystem> ControlService::system() const {
  std::lock_guard lock(mu_);
  return system_;
}

std::optional<std::string> ControlService::active_run() const {
  std::lock_guard lock(mu_);
  return active_;
}

absl::Status ControlService::DeploySetup(std::string_view setup_name) {
  std::lock_guard lock(mu_);
  if (active_) return absl::FailedPreconditionError(fmt::format("run {} is active", *active_));
  return system_->DeploySetup(setup_name);
}

absl::Status ControlService::RemoveSetup(std::string_view setup_name) {
  std::lock_guard lock(mu_);
  if (active_) return absl::FailedPreconditionError(fmt::format("run {} is active", *active_));
  return system_->RemoveSetup(setup_name);
}

}  // namespace abpipe::api
