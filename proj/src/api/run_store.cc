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

#include "abpipe/api/run_store.h"

#include <algorithm>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include "abpipe/common/status_macros.h"

namespace abpipe::api {
namespace {

namespace fs = std::filesystem;

nlohmann::json TimeToJson(const std::optional<absl::Time>& t) {
  if (!t) return nullptr;
  return absl::FormatTime(absl::RFC3339_full, *t, absl::UTCTimeZone());
}

absl::StatusOr<std::optional<absl::Time>> TimeFromJson(const nlohmann::json& json) {
  if (json.is_null()) return std::optional<absl::Time>();
  if (!json.is_string()) return absl::InvalidArgumentError("timestamp must be a string");
  absl::Time t;
  std::string error;
  if (!absl::ParseTime(absl::RFC3339_full, json.get<std::string>(), &t, &error)) {
    return absl::InvalidArgumentError(fmt::format("bad timestamp: {}", error));
  }
  return std::optional<absl::Time>(t);
}

// Whole-file replacement through a temporary sibling.
absl::Status WriteFileAtomically(const fs::path& path, std::string_view contents) {
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) return absl::InternalError(fmt::format("cannot write {}", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) return absl::InternalError(fmt::format("cannot replace {}: {}", path.string(), ec.message()));
  return absl::OkStatus();
}

absl::StatusOr<nlohmann::json> ReadJsonFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(fmt::format("cannot read {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json json = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (json.is_discarded()) {
    return absl::InvalidArgumentError(fmt::format("{} is not valid JSON", path.string()));
  }
  return json;
}

}  // namespace

std::string_view ClockModeName(traffic::ClockMode mode) {
  return mode == traffic::ClockMode::kVirtual ? "virtual" : "realtime";
}

absl::StatusOr<traffic::ClockMode> ParseClockMode(std::string_view name) {
  if (name == "virtual") return traffic::ClockMode::kVirtual;
  if (name == "realtime") return traffic::ClockMode::kRealtime;
  return absl::InvalidArgumentError(
      fmt::format("unknown clock mode: {} (expected virtual or realtime)", name));
}

bool IsTerminal(loop::RunStatus status) {
  return status == loop::RunStatus::kEnded || status == loop::RunStatus::kAborted ||
         status == loop::RunStatus::kFailed;
}

nlohmann::json ToJson(const RunRecord& record) {
  return {{"runId", record.run_id},
          {"pipelineId", record.pipeline_id},
          {"seed", record.seed},
          {"clock", ClockModeName(record.clock)},
          {"status", loop::RunStatusName(record.status)},
          {"startedAt", TimeToJson(record.started_at)},
          {"endedAt", TimeToJson(record.ended_at)}};
}

absl::StatusOr<RunRecord> RunRecordFromJson(const nlohmann::json& json) {
  if (!json.is_object()) return absl::InvalidArgumentError("run record must be an object");
  RunRecord record;
  try {
    record.run_id = json.at("runId").get<std::string>();
    record.pipeline_id = json.at("pipelineId").get<std::string>();
    record.seed = json.at("seed").get<uint64_t>();
    ABPIPE_ASSIGN_OR_RETURN(record.clock, ParseClockMode(json.at("clock").get<std::string>()));
    ABPIPE_ASSIGN_OR_RETURN(record.status,
                            loop::ParseRunStatus(json.at("status").get<std::string>()));
    ABPIPE_ASSIGN_OR_RETURN(record.started_at, TimeFromJson(json.at("startedAt")));
    ABPIPE_ASSIGN_OR_RETURN(record.ended_at, TimeFromJson(json.at("endedAt")));
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(fmt::format("bad run record: {}", e.what()));
  }
  return record;
}

absl::StatusOr<RunDirectory> RunDirectory::Create(const fs::path& out_root,
                                                  std::string_view run_id) {
  const fs::path path = out_root / std::string(run_id);
  std::error_code ec;
  if (fs::exists(path, ec)) {
    return absl::AlreadyExistsError(fmt::format("run directory exists: {}", path.string()));
  }
  fs::create_directories(path, ec);
  if (ec) {
    return absl::InternalError(fmt::format("cannot create {}: {}", path.string(), ec.message()));
  }
  RunDirectory dir(path);
  dir.events_.open(path / "events.jsonl", std::ios::binary | std::ios::app);
  if (!dir.events_) return absl::InternalError("cannot open events.jsonl");
  return dir;
}

absl::Status RunDirectory::WriteCatalog(const spec::Catalog& catalog) {
  return WriteFileAtomically(path_ / "catalog.json", spec::ToJson(catalog).dump(2) + "\n");
}

absl::Status RunDirectory::AppendEvent(const loop::PipelineEvent& event) {
  events_ << loop::ToJson(event).dump() << '\n';
  events_.flush();
  if (!events_) return absl::InternalError("cannot append to events.jsonl");
  return absl::OkStatus();
}

absl::Status RunDirectory::WriteRecord(const RunRecord& record) {
  return WriteFileAtomically(path_ / "run.json", ToJson(record).dump(2) + "\n");
}

absl::Status RunDirectory::WriteResult(const loop::PipelineResult& result) {
  return WriteFileAtomically(path_ / "result.json", loop::SerializeResult(result));
}

absl::StatusOr<loop::PipelineResult> LoadResult(const fs::path& result_file) {
  ABPIPE_ASSIGN_OR_RETURN(nlohmann::json json, ReadJsonFile(result_file));
  return loop::PipelineResultFromJson(json);
}

absl::StatusOr<RunRecord> LoadRun(const fs::path& run_dir) {
  ABPIPE_ASSIGN_OR_RETURN(nlohmann::json json, ReadJsonFile(run_dir / "run.json"));
  ABPIPE_ASSIGN_OR_RETURN(RunRecord record, RunRecordFromJson(json));
  if (fs::exists(run_dir / "result.json")) {
    ABPIPE_ASSIGN_OR_RETURN(record.result, LoadResult(run_dir / "result.json"));
  }
  return record;
}

std::vector<fs::path> ListRunDirectories(const fs::path& out_root) {
  std::vector<fs::path> dirs;
  std::error_code ec;
  for (const fs::directory_entry& entry : fs::directory_iterator(out_root, ec)) {
    if (entry.is_directory() && fs::exists(entry.path() / "run.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace abpipe::api
