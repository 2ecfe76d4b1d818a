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

#ifndef ABPIPE_API_RUN_STORE_H_
#define ABPIPE_API_RUN_STORE_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "abpipe/loop/result.h"
#include "abpipe/spec/catalog.h"
#include "abpipe/traffic/scheduler.h"

namespace abpipe::api {

std::string_view ClockModeName(traffic::ClockMode mode);
absl::StatusOr<traffic::ClockMode> ParseClockMode(std::string_view name);

// Status moves loaded -> running -> {ended, aborted, failed}.
struct RunRecord {
  std::string run_id;
  std::string pipeline_id;
  uint64_t seed = 0;
  traffic::ClockMode clock = traffic::ClockMode::kVirtual;
  loop::RunStatus status = loop::RunStatus::kLoaded;
  std::optional<absl::Time> started_at;
  std::optional<absl::Time> ended_at;
  std::optional<loop::PipelineResult> result;
};

bool IsTerminal(loop::RunStatus status);

// Without the result, which lives in its own file.
nlohmann::json ToJson(const RunRecord& record);
absl::StatusOr<RunRecord> RunRecordFromJson(const nlohmann::json& json);

// Append-only directory of one run:
//   catalog.json  catalog snapshot taken at start
//   events.jsonl  one pipeline event per line
//   run.json      the run record, rewritten on status changes
//   result.json   the final result
class RunDirectory {
 public:
  static absl::StatusOr<RunDirectory> Create(const std::filesystem::path& out_root,
                                             std::string_view run_id);

  const std::filesystem::path& path() const { return path_; }

  absl::Status WriteCatalog(const spec::Catalog& catalog);
  absl::Status AppendEvent(const loop::PipelineEvent& event);
  absl::Status WriteRecord(const RunRecord& record);
  absl::Status WriteResult(const loop::PipelineResult& result);

 private:
  explicit RunDirectory(std::filesystem::path path) : path_(std::move(path)) {}

  std::filesystem::path path_;
  std::ofstream events_;
};

// Reads a run back, with its result when one was written.
absl::StatusOr<RunRecord> LoadRun(const std::filesystem::path& run_dir);
absl::StatusOr<loop::PipelineResult> LoadResult(const std::filesystem::path& result_file);

// Run directories under `out_root`, by name.
std::vector<std::filesystem::path> ListRunDirectories(const std::filesystem::path& out_root);

}  // namespace abpipe::api

#endif  // ABPIPE_API_RUN_STORE_H_
