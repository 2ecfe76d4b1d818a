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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>
#include <httplib.h>
#include "abpipe/api/control_service.h"
#include "abpipe/api/http_server.h"
#include "abpipe/api/run_store.h"
#include "abpipe/api/summary.h"
#include "abpipe/loop/feedback_loop.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace abpipe::api {
namespace {

namespace fs = std::filesystem;
using ::testing::HasSubstr;
using loop::RunStatus;

constexpr char kS1[] = "s1-recommendation-upgrade";

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            fmt::format("abpipe-api-{}-{}", ::getpid(), counter_++);
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

ServiceOptions Options(std::optional<fs::path> out = std::nullopt, double time_scale = 1.0) {
  ServiceOptions options;
  options.out_dir = std::move(out);
  options.time_scale = time_scale;
  options.loop.sleep = [](absl::Duration) {};
  return options;
}

TEST(SummaryTest, OneToHundred) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  std::shuffle(v.begin(), v.end(), std::mt19937(3));
  BoxStats s = *Summarize(v);
  EXPECT_EQ(s.count, 100);
  EXPECT_DOUBLE_EQ(s.q1, 25.75);
  EXPECT_DOUBLE_EQ(s.median, 50.5);
  EXPECT_DOUBLE_EQ(s.q3, 75.25);
  EXPECT_DOUBLE_EQ(s.mean, 50.5);
  EXPECT_EQ(s.min, 1);
  EXPECT_EQ(s.max, 100);
  EXPECT_EQ(s.whisker_low, 1);
  EXPECT_EQ(s.whisker_high, 100);
  EXPECT_EQ(s.outliers, 0);
}

TEST(SummaryTest, EmptyAndConstant) {
  EXPECT_FALSE(Summarize({}).has_value());
  std::vector<double> constant(7, 4.5);
  BoxStats s = *Summarize(constant);
  EXPECT_EQ(s.q1, 4.5);
  EXPECT_EQ(s.median, 4.5);
  EXPECT_EQ(s.q3, 4.5);
  EXPECT_EQ(s.whisker_low, 4.5);
  EXPECT_EQ(s.whisker_high, 4.5);
  BoxStats one = *Summarize(std::vector<double>{2.0});
  EXPECT_EQ(one.q1, 2.0);
  EXPECT_EQ(one.q3, 2.0);
}

TEST(SummaryTest, WhiskersStopAtFences) {
  // q1 = 2, q3 = 4, fences at -1 and 7.
  BoxStats s = *Summarize(std::vector<double>{1, 2, 3, 4, 100});
  EXPECT_EQ(s.q1, 2);
  EXPECT_EQ(s.q3, 4);
  EXPECT_EQ(s.whisker_low, 1);
  EXPECT_EQ(s.whisker_high, 4);
  EXPECT_EQ(s.outliers, 1);
  EXPECT_EQ(s.max, 100);
}

TEST(SummaryTest, OrderingOnRandomData) {
  std::mt19937_64 rng(11);
  std::lognormal_distribution<double> dist(3.0, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 300);
    for (double& x : v) x = dist(rng);
    BoxStats s = *Summarize(v);
    EXPECT_LE(s.min, s.whisker_low);
    EXPECT_LE(s.whisker_low, s.q1);
    EXPECT_LE(s.q1, s.median);
    EXPECT_LE(s.median, s.q3);
    EXPECT_LE(s.q3, s.whisker_high);
    EXPECT_LE(s.whisker_high, s.max);
  }
}

TEST(RunStoreTest, RecordRoundTrip) {
  RunRecord record;
  record.run_id = "run-0007";
  record.pipeline_id = "p";
  record.seed = 9;
  record.status = RunStatus::kAborted;
  record.started_at = absl::FromUnixSeconds(1'800'000'000);
  auto back = RunRecordFromJson(ToJson(record));
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->run_id, "run-0007");
  EXPECT_EQ(back->status, RunStatus::kAborted);
  EXPECT_EQ(back->started_at, record.started_at);
  EXPECT_FALSE(back->ended_at.has_value());
  EXPECT_FALSE(ParseClockMode("sundial").ok());
}

TEST(ControlServiceTest, LoadCatalogs) {
  ControlService service(Options());
  auto report = service.LoadCatalogs(ABPIPE_SPECS_DIR);
  ASSERT_TRUE(report.ok());
  EXPECT_TRUE(report->ok());
  std::vector<spec::PipelineSpec> pipelines = service.ListPipelines();
  EXPECT_TRUE(std::any_of(pipelines.begin(), pipelines.end(),
                          [](const spec::PipelineSpec& p) { return p.id == kS1; }));

  TempDir empty;
  auto none = service.LoadCatalogs(empty.path());
  ASSERT_TRUE(none.ok());
  EXPECT_TRUE(none->errors.empty());
  EXPECT_TRUE(service.ListPipelines().empty());
  EXPECT_FALSE(service.LoadCatalogs(empty.path() / "missing").ok());
}

TEST(ControlServiceTest, RunLifecycleMatchesDirectRun) {
  ControlService service(Options());
  ASSERT_TRUE(service.LoadCatalogs(ABPIPE_SPECS_DIR).ok());
  EXPECT_EQ(service.StartRun("ghost", 1, traffic::ClockMode::kVirtual).status().code(),
            absl::StatusCode::kNotFound);

  auto run_id = service.PrepareRun(kS1, 7, traffic::ClockMode::kVirtual);
  ASSERT_TRUE(run_id.ok()) << run_id.status();
  EXPECT_EQ(service.GetStatus(*run_id)->record.status, RunStatus::kLoaded);
  EXPECT_EQ(service.StartRun(kS1, 8, traffic::ClockMode::kVirtual).status().code(),
            absl::StatusCode::kFailedPrecondition);
  ASSERT_TRUE(service.LaunchRun(*run_id).ok());
  ASSERT_TRUE(service.WaitForRun(*run_id, absl::Seconds(60)).ok());

  RunStatusView status = *service.GetStatus(*run_id);
  EXPECT_EQ(status.record.status, RunStatus::kEnded);
  EXPECT_TRUE(status.record.started_at.has_value());
  EXPECT_TRUE(status.record.ended_at.has_value());
  ASSERT_FALSE(status.recent_events.empty());
  EXPECT_EQ(status.recent_events.back().kind, loop::EventKind::kPipelineEnded);

  loop::PipelineResult served = *service.GetResults(*run_id);
  EXPECT_FALSE(served.partial);
  spec::ValidationReport report;
  spec::Catalog catalog = *spec::LoadCatalogDirectory(ABPIPE_SPECS_DIR, report);
  loop::RunOptions direct;
  direct.seed = 7;
  EXPECT_EQ(loop::SerializeResult(served),
            loop::SerializeResult(loop::RunPipeline(catalog, kS1, direct)));

  EXPECT_EQ(service.AbortRun(*run_id).code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_EQ(service.GetResults("run-9999").status().code(), absl::StatusCode::kNotFound);
  EXPECT_FALSE(service.active_run().has_value());

  // A new run is allowed once the first has ended.
  auto second = service.StartRun(kS1, 7, traffic::ClockMode::kVirtual);
  ASSERT_TRUE(second.ok());
  ASSERT_TRUE(service.WaitForRun(*second, absl::Seconds(60)).ok());
  EXPECT_EQ(loop::SerializeResult(*service.GetResults(*second)), loop::SerializeResult(served));
}

TEST(ControlServiceTest, PersistsAndRestores) {
  TempDir out;
  std::string run_id;
  std::string bytes;
  {
    ControlService service(Options(out.path()));
    ASSERT_TRUE(service.LoadCatalogs(ABPIPE_SPECS_DIR).ok());
    run_id = *service.StartRun(kS1, 3, traffic::ClockMode::kVirtual);
    ASSERT_TRUE(service.WaitForRun(run_id, absl::Seconds(60)).ok());
    loop::PipelineResult result = *service.GetResults(run_id);
    bytes = loop::SerializeResult(result);

    const fs::path dir = out.path() / run_id;
    EXPECT_EQ(ReadFile(dir / "result.json"), bytes);
    EXPECT_TRUE(fs::exists(dir / "catalog.json"));
    std::ifstream events(dir / "events.jsonl");
    size_t lines = 0;
    for (std::string line; std::getline(events, line);) {
      auto event = nlohmann::json::parse(line);
      EXPECT_EQ(event["seq"], lines);
      ++lines;
    }
    EXPECT_EQ(lines, result.trace.size());
    EXPECT_EQ(LoadRun(dir)->status, RunStatus::kEnded);
  }
  ControlService restarted(Options(out.path()));
  auto reloaded = restarted.GetResults(run_id);
  ASSERT_TRUE(reloaded.ok()) << reloaded.status();
  EXPECT_EQ(loop::SerializeResult(*reloaded), bytes);
  EXPECT_EQ(*reloaded, *LoadResult(out.path() / run_id / "result.json"));
  EXPECT_EQ(restarted.GetStatus(run_id)->record.status, RunStatus::kEnded);
  // Numbering continues after restored runs.
  ASSERT_TRUE(restarted.LoadCatalogs(ABPIPE_SPECS_DIR).ok());
  auto next = restarted.PrepareRun(kS1, 1, traffic::ClockMode::kVirtual);
  ASSERT_TRUE(next.ok());
  EXPECT_NE(*next, run_id);
}

TEST(ControlServiceTest, LiveRunAbortAndPartialResults) {
  // Realtime at 50x: one virtual second every 20 ms of wall time.
  ControlService service(Options(std::nullopt, 50.0));
  ASSERT_TRUE(service.LoadCatalogs(ABPIPE_SPECS_DIR).ok());
  auto run_id = service.StartRun(kS1, 1, traffic::ClockMode::kRealtime);
  ASSERT_TRUE(run_id.ok());

  std::vector<RunStatus> seen;
  int64_t last_count = 0;
  uint64_t last_seq = 0;
  for (int i = 0; i < 6; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(150));
    RunStatusView status = *service.GetStatus(*run_id);
    seen.push_back(status.record.status);
    EXPECT_EQ(status.record.status, RunStatus::kRunning);
    for (const auto& [metric, n] : status.samples_collected) EXPECT_LE(n, 20000);
    LiveSummary summary = *service.GetLiveSummary(*run_id);
    EXPECT_GT(summary.seq, last_seq);
    last_seq = summary.seq;
    if (summary.per_variant.count("A")) {
      EXPECT_GE(summary.per_variant.at("A").count, last_count);
      last_count = summary.per_variant.at("A").count;
    }
  }
  EXPECT_GT(last_count, 0);
  EXPECT_EQ(service.GetStatus(*run_id)->current_experiment, "Upgrade v1.0.0 - v1.1.0");
  EXPECT_EQ(service.DeploySetup("Recommendation_upgrade").code(),
            absl::StatusCode::kFailedPrecondition);

  loop::PipelineResult partial = *service.GetResults(*run_id);
  EXPECT_TRUE(partial.partial);
  EXPECT_EQ(partial.status, RunStatus::kRunning);
  ASSERT_EQ(partial.path.size(), 1u);

  ASSERT_TRUE(service.AbortRun(*run_id).ok());
  ASSERT_TRUE(service.WaitForRun(*run_id, absl::Seconds(30)).ok());
  EXPECT_EQ(service.GetStatus(*run_id)->record.status, RunStatus::kAborted);
  EXPECT_TRUE(service.AbortRun(*run_id).ok());  // idempotent
  loop::PipelineResult aborted = *service.GetResults(*run_id);
  EXPECT_FALSE(aborted.partial);
  EXPECT_EQ(aborted.diagnostic, "aborted by operator");
  EXPECT_EQ(aborted.path, partial.path);
  EXPECT_FALSE(service.system()->active_setup().has_value());
}

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    service_ = std::make_unique<ControlService>(Options(out_.path()));
    server_ = std::make_unique<HttpServer>(service_.get());
    auto port = server_->Bind("127.0.0.1", 0);
    ASSERT_TRUE(port.ok());
    thread_ = std::thread([this] { (void)server_->Serve(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", *port);
    client_->set_read_timeout(30, 0);
  }
  void TearDown() override {
    server_->Stop();
    thread_.join();
  }

  std::pair<int, nlohmann::json> Post(const std::string& path, const nlohmann::json& body) {
    auto res = client_->Post(path.c_str(), body.dump(), "application/json");
    return {res->status, nlohmann::json::parse(res->body)};
  }
  std::pair<int, nlohmann::json> Get(const std::string& path) {
    auto res = client_->Get(path.c_str());
    return {res->status, nlohmann::json::parse(res->body)};
  }

  TempDir out_;
  std::unique_ptr<ControlService> service_;
  std::unique_ptr<HttpServer> server_;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpTest, RunThroughEndpoints) {
  auto [load_code, report] = Post("/catalogs/load", {{"directory", ABPIPE_SPECS_DIR}});
  ASSERT_EQ(load_code, 200);
  EXPECT_TRUE(report["errors"].empty());
  auto [list_code, pipelines] = Get("/pipelines");
  EXPECT_EQ(list_code, 200);
  EXPECT_FALSE(pipelines.empty());

  EXPECT_EQ(Post("/runs", {{"pipelineId", "ghost"}}).first, 404);
  EXPECT_EQ(Post("/runs", {{"pipelineId", kS1}, {"clock", "sundial"}}).first, 400);
  auto [start_code, record] = Post("/runs", {{"pipelineId", kS1}, {"seed", 2}, {"start", false}});
  ASSERT_EQ(start_code, 200);
  const std::string run_id = record["runId"];
  EXPECT_EQ(record["status"], "loaded");
  EXPECT_EQ(Get("/runs/" + run_id + "/status").second["status"], "loaded");
  EXPECT_EQ(Post("/runs/" + run_id + "/start", {}).second["status"], "running");

  std::string status;
  for (int i = 0; i < 600 && status != "ended"; ++i) {
    status = Get("/runs/" + run_id + "/status").second["status"];
    if (status != "ended") std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  ASSERT_EQ(status, "ended");

  auto res = client_->Get(("/runs/" + run_id + "/results").c_str());
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->body, ReadFile(out_.path() / run_id / "result.json"));
  auto results = nlohmann::json::parse(res->body);
  EXPECT_EQ(results["experiments"][0]["outcome"]["decision"], "inconclusive");
  EXPECT_EQ(results["experiments"][0]["firedRule"], "Performance OK");

  auto [summary_code, summary] = Get("/runs/" + run_id + "/summary");
  EXPECT_EQ(summary_code, 200);
  EXPECT_EQ(summary["runId"], run_id);

  EXPECT_EQ(Post("/runs/" + run_id + "/abort", {}).first, 409);
  EXPECT_EQ(Get("/runs/run-4242/status").first, 404);
  EXPECT_EQ(Get("/runs").second.size(), 1u);
}

TEST_F(HttpTest, StoreProbeAndEffector) {
  ASSERT_EQ(Post("/catalogs/load", {{"directory", ABPIPE_SPECS_DIR}}).first, 200);
  EXPECT_EQ(Post("/store/purchase", {{"clientId", "Standard:1"}}).first, 503);
  ASSERT_EQ(Post("/effector/setup/Recommendation_upgrade/deploy", {}).first, 200);
  EXPECT_EQ(Post("/effector/setup/Nowhere/deploy", {}).first, 404);
  EXPECT_EQ(Post("/effector/setup/Recommendation_upgrade/deploy", {}).first, 409);

  const std::string ab = "ws-recommendation-ab";
  ASSERT_EQ(Post("/effector/" + ab + "/routing", {{"a", 100}, {"b", 0}}).first, 200);
  EXPECT_EQ(Post("/effector/" + ab + "/routing", {{"a", 60}, {"b", 60}}).first, 400);
  for (int i = 0; i < 5; ++i) {
    auto [code, body] = Post("/store/purchase", {{"clientId", fmt::format("Standard:{}", i)},
                                                 {"items", {"book-1", "book-2"}}});
    ASSERT_EQ(code, 200) << body.dump();
    EXPECT_EQ(body["variant"], "A");
    EXPECT_GT(body["responseTimeMs"].get<double>(), 0.0);
  }
  auto [hist_code, history] = Get("/probe/" + ab + "/history/A?since=2");
  ASSERT_EQ(hist_code, 200) << history.dump();
  ASSERT_EQ(history["records"].size(), 3u);
  EXPECT_EQ(history["records"][0]["clientId"], "Standard:2");
  EXPECT_EQ(Get("/probe/" + ab + "/history/B").second["records"].size(), 0u);
  EXPECT_EQ(Get("/probe/" + ab + "/history/C").first, 400);
  EXPECT_EQ(Get("/probe/" + ab + "/history/A?since=x").first, 400);
  EXPECT_EQ(Get("/probe/nope/history/A").first, 404);

  const uint64_t epoch = history["epoch"];
  auto [clear_code, cleared] = Post("/effector/" + ab + "/clear", {});
  ASSERT_EQ(clear_code, 200);
  EXPECT_EQ(cleared["epoch"], epoch + 1);
  EXPECT_EQ(Get("/probe/" + ab + "/history/A").second["records"].size(), 0u);

  EXPECT_EQ(Post("/store/purchase", {{"items", nlohmann::json::array()}}).first, 400);
  auto bad = client_->Post("/store/purchase", "{not json", "application/json");
  EXPECT_EQ(bad->status, 400);
  ASSERT_EQ(Post("/effector/setup/Recommendation_upgrade/remove", {}).first, 200);
  EXPECT_EQ(Post("/effector/setup/Recommendation_upgrade/remove", {}).first, 409);
}

}  // namespace
}  // namespace abpipe::api
