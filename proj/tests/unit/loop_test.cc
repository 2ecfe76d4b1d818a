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

#include <atomic>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include "abpipe/loop/feedback_loop.h"
#include "abpipe/loop/knowledge.h"
#include "abpipe/loop/managed_system.h"
#include "abpipe/loop/result.h"
#include "abpipe/spec/catalog.h"
#include "abpipe/spec/parse.h"
#include "abpipe/stats/two_sample.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace abpipe::loop {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

constexpr char kS1[] = "s1-recommendation-upgrade";
constexpr char kUpgrade[] = "Upgrade v1.0.0 - v1.1.0";
constexpr char kClicks[] = "Clicks v1.0.0 - v1.1.0";
constexpr char kPurchases[] = "Purchases v1.0.0 - v1.1.0";

spec::Catalog Shipped() {
  spec::ValidationReport report;
  auto catalog = spec::LoadCatalogDirectory(ABPIPE_SPECS_DIR, report);
  EXPECT_TRUE(catalog.ok() && report.ok());
  return *catalog;
}

RunOptions Seeded(uint64_t seed) {
  RunOptions options;
  options.seed = seed;
  options.loop.sleep = [](absl::Duration) {};
  return options;
}

// A small experiment on the shipped setup.
void AddExperiment(spec::Catalog& catalog, const std::string& id, int samples,
                   const std::string& variable, const std::string& metric = "ResponseTime",
                   int weight_a = 50) {
  auto parsed = spec::ParseExperiment(fmt::format(R"({{"{}": {{
    "variantA": "ws-recommendation-service:1.0.0",
    "variantB": "ws-recommendation-service:1.1.0",
    "userProfile": "Standard",
    "ABAssignment": {{"weightA": {}, "weightB": {}}},
    "samples": {},
    "metrics": ["{}_A", "{}_B"],
    "statisticalTest": {{"hypothesis": "{}_A == {}_B", "pValue": 0.025,
                         "type": "welch-t-test", "resultingVariable": "{}"}}
  }}}})",
                                                  id, weight_a, 100 - weight_a, samples, metric,
                                                  metric, metric, metric, variable));
  ASSERT_TRUE(parsed.ok()) << parsed.status();
  catalog.experiments[id] = *parsed;
}

void AddRule(spec::Catalog& catalog, const std::string& id, const std::string& from,
             const std::string& to, const std::string& conditions = "[]") {
  auto parsed = spec::ParseTransitionRule(fmt::format(
      R"({{"{}": {{"fromExperiment": "{}", "toExperiment": "{}", "conditions": {}}}}})", id,
      from, to, conditions));
  ASSERT_TRUE(parsed.ok()) << parsed.status();
  catalog.rules[id] = *parsed;
}

void AddPipeline(spec::Catalog& catalog, const std::string& id, const std::string& start,
                 std::vector<std::string> experiments, std::vector<std::string> rules,
                 const std::string& setup = "Recommendation_upgrade") {
  catalog.pipelines[id] =
      spec::PipelineSpec{id, setup, start, std::move(experiments), std::move(rules)};
}

// Every fired rule is an edge of the pipeline and the path follows them.
void ExpectValidTrace(const spec::Catalog& catalog, const PipelineResult& result) {
  ASSERT_FALSE(result.trace.empty());
  EXPECT_EQ(result.trace.front().kind, EventKind::kSetupDeployed);
  EXPECT_EQ(result.trace.back().kind, EventKind::kPipelineEnded);
  for (size_t i = 0; i < result.trace.size(); ++i) {
    EXPECT_EQ(result.trace[i].seq, i);
    if (i > 0) EXPECT_GE(result.trace[i].timestamp, result.trace[i - 1].timestamp);
  }
  for (size_t i = 0; i < result.experiments.size(); ++i) {
    const ExperimentRecord& e = result.experiments[i];
    EXPECT_EQ(e.experiment_id, result.path[i]);
    if (e.fired_rule) {
      const spec::TransitionRule& rule = catalog.rules.at(*e.fired_rule);
      EXPECT_EQ(rule.from_experiment, e.experiment_id);
      EXPECT_EQ(rule.to_experiment, *e.next);
      if (i + 1 < result.experiments.size()) {
        EXPECT_EQ(result.experiments[i + 1].experiment_id, rule.to_experiment);
      }
    }
  }
}

TEST(RunPipelineTest, S1FullPathWithExactBudgets) {
  const spec::Catalog catalog = Shipped();
  PipelineResult result = RunPipeline(catalog, kS1, Seeded(1));
  ASSERT_EQ(result.status, RunStatus::kEnded) << result.diagnostic;
  EXPECT_EQ(result.end_reason, kEndReasonNoMatchingRule);
  EXPECT_THAT(result.path, ElementsAre(kUpgrade, kClicks, kPurchases));
  ASSERT_EQ(result.experiments.size(), 3u);
  for (const ExperimentRecord& e : result.experiments) {
    ASSERT_TRUE(e.outcome.has_value()) << e.experiment_id;
    EXPECT_EQ(e.outcome->samples_a, 20000);
    EXPECT_EQ(e.outcome->samples_b, 20000);
  }
  EXPECT_EQ(result.experiments[0].outcome->decision, stats::Decision::kInconclusive);
  EXPECT_EQ(*result.experiments[0].fired_rule, "Performance OK");
  EXPECT_EQ(result.experiments[1].outcome->decision, stats::Decision::kReject);
  EXPECT_EQ(*result.experiments[1].fired_rule, "Extra Clicks");
  EXPECT_FALSE(result.experiments[2].fired_rule.has_value());
  EXPECT_EQ(*result.experiments[2].next, "end");
  EXPECT_EQ(std::get<std::string>(result.bindings.at("result-wt-test")), "inconclusive");
  EXPECT_EQ(std::get<std::string>(result.bindings.at("result-clicks")), "reject");
  ExpectValidTrace(catalog, result);

  int progress = 0;
  for (const PipelineEvent& e : result.trace) progress += e.kind == EventKind::kSamplesProgress;
  EXPECT_EQ(progress, 30);  // one per 10% per experiment
}

TEST(RunPipelineTest, DeterministicPerSeed) {
  const spec::Catalog catalog = Shipped();
  const std::string a = SerializeResult(RunPipeline(catalog, kS1, Seeded(5)));
  const std::string b = SerializeResult(RunPipeline(catalog, kS1, Seeded(5)));
  const std::string c = SerializeResult(RunPipeline(catalog, kS1, Seeded(6)));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(RunPipelineTest, SlowerVariantTakesPerformanceOverhead) {
  spec::Catalog catalog = Shipped();
  catalog.setups.at("Recommendation_upgrade")
      .variant_models.at("ws-recommendation-service:1.1.0")
      .latency.params[0] += 1.0;
  PipelineResult result = RunPipeline(catalog, kS1, Seeded(1));
  ASSERT_EQ(result.status, RunStatus::kEnded) << result.diagnostic;
  EXPECT_EQ(result.end_reason, kEndReasonRule);
  EXPECT_THAT(result.path, ElementsAre(kUpgrade));
  EXPECT_EQ(result.experiments[0].outcome->decision, stats::Decision::kReject);
  EXPECT_EQ(*result.experiments[0].fired_rule, "Performance Overhead");
  EXPECT_EQ(std::get<std::string>(result.bindings.at("result-wt-test")), "reject");
}

TEST(RunPipelineTest, SingleExperimentUnconditionalEnd) {
  spec::Catalog catalog = Shipped();
  AddExperiment(catalog, "solo", 200, "solo-result");
  AddRule(catalog, "solo-done", "solo", "end");
  AddPipeline(catalog, "solo-pipeline", "solo", {"solo"}, {"solo-done"});
  PipelineResult result = RunPipeline(catalog, "solo-pipeline", Seeded(3));
  ASSERT_EQ(result.status, RunStatus::kEnded) << result.diagnostic;
  EXPECT_EQ(result.end_reason, kEndReasonRule);
  EXPECT_EQ(result.path.size(), 1u);
  EXPECT_EQ(result.experiments[0].outcome->samples_a, 200);
  ExpectValidTrace(catalog, result);
}

TEST(RunPipelineTest, MissingSetupFailsBeforeAnyExperiment) {
  spec::Catalog catalog = Shipped();
  AddExperiment(catalog, "solo", 200, "solo-result");
  AddPipeline(catalog, "no-setup", "solo", {"solo"}, {}, "Nowhere");
  PipelineResult result = RunPipeline(catalog, "no-setup", Seeded(1));
  EXPECT_EQ(result.status, RunStatus::kFailed);
  EXPECT_THAT(result.diagnostic, HasSubstr("Nowhere"));
  EXPECT_TRUE(result.experiments.empty());
  EXPECT_TRUE(result.path.empty());

  PipelineResult unknown = RunPipeline(catalog, "ghost", Seeded(1));
  EXPECT_EQ(unknown.status, RunStatus::kFailed);
  EXPECT_THAT(unknown.diagnostic, HasSubstr("unknown pipeline"));
}

TEST(RunPipelineTest, UnboundVariableAborts) {
  spec::Catalog catalog = Shipped();
  AddExperiment(catalog, "solo", 100, "solo-result");
  AddRule(catalog, "bad", "solo", "end",
          R"([{"leftOperand": "never-bound", "operator": "==", "rightOperand": "reject"}])");
  AddPipeline(catalog, "bad-rule", "solo", {"solo"}, {"bad"});
  PipelineResult result = RunPipeline(catalog, "bad-rule", Seeded(1));
  EXPECT_EQ(result.status, RunStatus::kAborted);
  EXPECT_THAT(result.diagnostic, HasSubstr("unbound variable: never-bound"));
  EXPECT_EQ(result.trace.back().kind, EventKind::kPipelineEnded);
}

TEST(RunPipelineTest, VisitGuardStopsRunawayCycles) {
  spec::Catalog catalog = Shipped();
  AddExperiment(catalog, "loop", 20, "loop-result");
  AddRule(catalog, "again", "loop", "loop");
  AddPipeline(catalog, "cycle", "loop", {"loop"}, {"again"});
  PipelineResult result = RunPipeline(catalog, "cycle", Seeded(1));
  EXPECT_EQ(result.status, RunStatus::kAborted);
  EXPECT_THAT(result.diagnostic, HasSubstr("visit guard"));
  EXPECT_EQ(result.path.size(), 100u);
  for (const ExperimentRecord& e : result.experiments) {
    EXPECT_EQ(e.outcome->samples_a, 20);
    EXPECT_EQ(e.outcome->samples_b, 20);
  }
  EXPECT_EQ(result.experiments.back().visit, 100);
}

TEST(RunPipelineTest, AmbiguousRulesFireFirstAndWarn) {
  spec::Catalog catalog = Shipped();
  AddExperiment(catalog, "first", 100, "first-result");
  AddExperiment(catalog, "second", 100, "second-result");
  AddRule(catalog, "to-second", "first", "second");
  AddRule(catalog, "to-end", "first", "end");
  AddRule(catalog, "second-done", "second", "end");
  AddPipeline(catalog, "ambiguous", "first", {"first", "second"},
              {"to-second", "to-end", "second-done"});
  PipelineResult result = RunPipeline(catalog, "ambiguous", Seeded(2));
  ASSERT_EQ(result.status, RunStatus::kEnded) << result.diagnostic;
  EXPECT_THAT(result.path, ElementsAre("first", "second"));
  ASSERT_EQ(result.warnings.size(), 1u);
  EXPECT_THAT(result.warnings[0], HasSubstr("ambiguous"));
}

TEST(RunPipelineTest, ZeroWeightStallsAndAborts) {
  spec::Catalog catalog = Shipped();
  AddExperiment(catalog, "lopsided", 50, "lop-result", "ResponseTime", 100);
  AddPipeline(catalog, "stall", "lopsided", {"lopsided"}, {});
  RunOptions options = Seeded(1);
  options.loop.stall_timeout = absl::Seconds(30);
  PipelineResult result = RunPipeline(catalog, "stall", options);
  EXPECT_EQ(result.status, RunStatus::kAborted);
  EXPECT_THAT(result.diagnostic, HasSubstr("no new samples"));
}

TEST(RunPipelineTest, AbortFlag) {
  const spec::Catalog catalog = Shipped();
  ManagedSystem system(*traffic::SimClock::Create(traffic::ClockMode::kVirtual));
  KnowledgeStore knowledge(kS1);
  std::atomic<bool> abort{true};
  PipelineResult result = RunPipeline(catalog, kS1, system, knowledge, Seeded(1), &abort);
  EXPECT_EQ(result.status, RunStatus::kAborted);
  EXPECT_EQ(result.diagnostic, "aborted by operator");
  EXPECT_FALSE(system.active_setup().has_value());
}

TEST(RunPipelineTest, SetupRemovedAfterRunAndRedeployable) {
  const spec::Catalog catalog = Shipped();
  ManagedSystem system(*traffic::SimClock::Create(traffic::ClockMode::kVirtual));
  KnowledgeStore first(kS1);
  spec::Catalog small = catalog;
  small.experiments.at(kUpgrade).samples = 300;
  small.experiments.at(kClicks).samples = 300;
  small.experiments.at(kPurchases).samples = 300;
  ASSERT_EQ(RunPipeline(small, kS1, system, first, Seeded(1)).status, RunStatus::kEnded);
  EXPECT_FALSE(system.active_setup().has_value());
  KnowledgeStore second(kS1);
  EXPECT_EQ(RunPipeline(small, kS1, system, second, Seeded(2)).status, RunStatus::kEnded);
}

// Scripted managed system for stage-level tests.
class FakeSystem : public Probe, public Effector, public SimulationDriver {
 public:
  absl::StatusOr<std::vector<RequestRecord>> GetRequestHistory(std::string_view, Variant v,
                                                               size_t since) override {
    if (unavailable > 0) {
      --unavailable;
      return absl::UnavailableError("probe down");
    }
    const auto& h = history[v == Variant::kA ? 0 : 1];
    if (since >= h.size()) return std::vector<RequestRecord>{};
    return std::vector<RequestRecord>(h.begin() + static_cast<ptrdiff_t>(since), h.end());
  }
  absl::StatusOr<uint64_t> GetHistoryEpoch(std::string_view) override { return epoch; }
  absl::Status DeploySetup(std::string_view) override { return absl::OkStatus(); }
  absl::Status RemoveSetup(std::string_view) override { return absl::OkStatus(); }
  absl::Status SetAbRouting(std::string_view, int a, int) override {
    weight_a = a;
    return absl::OkStatus();
  }
  absl::Status ClearAbComponentHistory(std::string_view) override {
    history[0].clear();
    history[1].clear();
    ++epoch;
    return absl::OkStatus();
  }
  absl::Status ActivateExperiment(std::string_view, const spec::ExperimentSpec& e,
                                  uint64_t) override {
    activated.push_back(e.id);
    return absl::OkStatus();
  }
  absl::Status SwitchTraffic(std::string_view, const spec::UserProfile&, uint64_t) override {
    return absl::OkStatus();
  }
  traffic::GeneratorStats StopTraffic() override { return {}; }
  void Advance(absl::Duration d) override { now = now + d; }
  SimTime Now() const override { return now; }

  void Add(Variant v, double ms, bool clicked = false) {
    RequestRecord r;
    r.client_id = "c";
    r.variant = v;
    r.response_time_ms = ms;
    r.epoch = epoch;
    r.outcome = RequestOutcome{clicked, false, false};
    history[v == Variant::kA ? 0 : 1].push_back(r);
  }

  std::vector<RequestRecord> history[2];
  uint64_t epoch = 0;
  int weight_a = -1;
  int unavailable = 0;
  std::vector<std::string> activated;
  SimTime now;
};

struct StageFixture {
  explicit StageFixture(int samples = 100) : knowledge("stages") {
    catalog = Shipped();
    AddExperiment(catalog, "rt", samples, "rt-result");
    AddExperiment(catalog, "clicks", samples, "clicks-result", "Clicks", 30);
    AddRule(catalog, "rt-ok", "rt", "clicks",
            R"([{"leftOperand": "rt-result", "operator": "!=", "rightOperand": "reject"}])");
    AddPipeline(catalog, "stages", "rt", {"rt", "clicks"}, {"rt-ok"});
    pipeline = *spec::ResolvePipeline(catalog.pipelines.at("stages"), catalog);
    LoopOptions options;
    options.sleep = [](absl::Duration) {};
    loop = std::make_unique<FeedbackLoop>(&pipeline, &fake, &fake, &fake, &knowledge, 9,
                                          options);
  }
  spec::Catalog catalog;
  spec::ExecutablePipeline pipeline;
  FakeSystem fake;
  KnowledgeStore knowledge;
  std::unique_ptr<FeedbackLoop> loop;
};

TEST(StagesTest, MonitorAppendsIncrementally) {
  StageFixture f;
  ASSERT_TRUE(f.loop->StartExperiment("rt").ok());
  for (int i = 0; i < 100; ++i) f.fake.Add(Variant::kA, 10 + i);
  ASSERT_TRUE(f.loop->Monitor().ok());
  EXPECT_EQ(f.knowledge.SampleCount("ResponseTime_A"), 100u);
  EXPECT_EQ(f.knowledge.SampleCount("ResponseTime_B"), 0u);
  ASSERT_TRUE(f.loop->Monitor().ok());  // nothing new
  EXPECT_EQ(f.knowledge.SampleCount("ResponseTime_A"), 100u);
  f.fake.Add(Variant::kA, 1);
  ASSERT_TRUE(f.loop->Monitor().ok());
  EXPECT_EQ(f.knowledge.SampleCount("ResponseTime_A"), 101u);
  EXPECT_EQ(f.knowledge.samples().at("ResponseTime_A").back(), 1.0);
}

TEST(StagesTest, ClickRecordsMapToClickSeries) {
  StageFixture f;
  ASSERT_TRUE(f.loop->StartExperiment("clicks").ok());
  EXPECT_EQ(f.fake.weight_a, 30);
  f.fake.Add(Variant::kB, 12, /*clicked=*/true);
  f.fake.Add(Variant::kA, 12, /*clicked=*/false);
  ASSERT_TRUE(f.loop->Monitor().ok());
  EXPECT_EQ(f.knowledge.samples().at("Clicks_B"), std::vector<double>{1.0});
  EXPECT_EQ(f.knowledge.samples().at("Clicks_A"), std::vector<double>{0.0});
}

TEST(StagesTest, AnalyzeWaitsForTheBudgetThenUsesExactlyIt) {
  StageFixture f;
  ASSERT_TRUE(f.loop->StartExperiment("rt").ok());
  for (int i = 0; i < 100; ++i) f.fake.Add(Variant::kA, 10 + i % 7);
  for (int i = 0; i < 99; ++i) f.fake.Add(Variant::kB, 10 + i % 5);
  ASSERT_TRUE(f.loop->Monitor().ok());
  auto none = f.loop->Analyze();
  ASSERT_TRUE(none.ok());
  EXPECT_FALSE(none->has_value());
  for (int i = 0; i < 50; ++i) f.fake.Add(Variant::kB, 1e6);  // beyond the budget
  ASSERT_TRUE(f.loop->Monitor().ok());
  auto outcome = f.loop->Analyze();
  ASSERT_TRUE(outcome.ok() && outcome->has_value());
  EXPECT_EQ((*outcome)->samples_b, 100);
  // Only the first of the large values is inside the budget.
  std::vector<double> a;
  std::vector<double> b;
  for (int i = 0; i < 100; ++i) a.push_back(10 + i % 7);
  for (int i = 0; i < 99; ++i) b.push_back(10 + i % 5);
  b.push_back(1e6);
  EXPECT_DOUBLE_EQ((*outcome)->p_value, stats::WelchTTest(a, b)->p);
  EXPECT_EQ(std::get<std::string>(f.knowledge.bindings().at("rt-result")),
            std::string(stats::DecisionName((*outcome)->decision)));
}

TEST(StagesTest, PlanAndExecuteMoveToNextExperiment) {
  StageFixture f;
  ASSERT_TRUE(f.loop->StartExperiment("rt").ok());
  for (int i = 0; i < 100; ++i) {
    f.fake.Add(Variant::kA, 10 + i % 3);
    f.fake.Add(Variant::kB, 10 + i % 3);
  }
  ASSERT_TRUE(f.loop->Monitor().ok());
  ASSERT_TRUE(f.loop->Analyze().ok());
  auto decision = f.loop->Plan();
  ASSERT_TRUE(decision.ok());
  EXPECT_EQ(decision->fired_rule, "rt-ok");
  EXPECT_EQ(decision->next, "clicks");
  const uint64_t epoch_before = f.fake.epoch;
  ASSERT_TRUE(f.loop->Execute(*decision).ok());
  EXPECT_EQ(f.fake.epoch, epoch_before + 1);
  EXPECT_EQ(f.fake.weight_a, 30);
  EXPECT_THAT(f.fake.activated, ElementsAre("rt", "clicks"));
  EXPECT_EQ(f.knowledge.current_experiment(), "clicks");
  EXPECT_EQ(f.knowledge.SampleCount("ResponseTime_A"), 0u);
}

TEST(StagesTest, NoOutgoingRulesPlansEnd) {
  StageFixture f;
  ASSERT_TRUE(f.loop->StartExperiment("clicks").ok());
  auto decision = f.loop->Plan();
  ASSERT_TRUE(decision.ok());
  EXPECT_EQ(decision->next, "end");
  EXPECT_TRUE(decision->fired_rule.empty());
  ASSERT_TRUE(f.loop->Execute(*decision).ok());
  EXPECT_FALSE(f.knowledge.current_experiment().has_value());
}

TEST(StagesTest, ProbeRetriesThenSucceeds) {
  StageFixture f;
  ASSERT_TRUE(f.loop->StartExperiment("rt").ok());
  f.fake.Add(Variant::kA, 5);
  f.fake.unavailable = 3;
  ASSERT_TRUE(f.loop->Monitor().ok());
  EXPECT_EQ(f.knowledge.SampleCount("ResponseTime_A"), 1u);
}

TEST(StagesTest, ProbeUnreachableFails) {
  StageFixture f;
  ASSERT_TRUE(f.loop->StartExperiment("rt").ok());
  f.fake.unavailable = 1000;
  absl::Status s = f.loop->Monitor();
  EXPECT_EQ(s.code(), absl::StatusCode::kUnavailable);
  EXPECT_THAT(std::string(s.message()), HasSubstr("probe unreachable after 5 attempts"));
}

TEST(StagesTest, ExternalClearIsDetected) {
  StageFixture f;
  ASSERT_TRUE(f.loop->StartExperiment("rt").ok());
  ASSERT_TRUE(f.fake.ClearAbComponentHistory("x").ok());
  absl::Status s = f.loop->Monitor();
  EXPECT_THAT(std::string(s.message()), HasSubstr("cleared outside the loop"));
}

TEST(KnowledgeStoreTest, SubscribersSeeEventsInOrder) {
  KnowledgeStore knowledge("p");
  std::vector<uint64_t> seen;
  knowledge.Subscribe([&](const PipelineEvent& e) { seen.push_back(e.seq); });
  knowledge.Emit(EventKind::kSetupDeployed, SimTime(), {{"setup", "s"}});
  knowledge.Emit(EventKind::kPipelineEnded, SimTime::FromSeconds(1), {});
  EXPECT_THAT(seen, ElementsAre(0u, 1u));
  EXPECT_EQ(knowledge.Snapshot().trace.size(), 2u);
}

TEST(KnowledgeStoreTest, ExperimentsResetSamplesButKeepBindings) {
  KnowledgeStore knowledge("p");
  knowledge.BeginExperiment("one", 1, SimTime(), {"ResponseTime_A"});
  knowledge.AppendSamples("ResponseTime_A", {1, 2, 3});
  stats::TestOutcome outcome;
  outcome.resulting_variable = "x";
  outcome.decision = stats::Decision::kReject;
  knowledge.RecordOutcome(outcome, SimTime());
  knowledge.BeginExperiment("two", 1, SimTime(), {"Clicks_A"});
  EXPECT_EQ(knowledge.SampleCount("ResponseTime_A"), 0u);
  EXPECT_EQ(std::get<std::string>(knowledge.bindings().at("x")), "reject");
  EXPECT_EQ(knowledge.Snapshot().experiments.size(), 2u);
}

TEST(ResultJsonTest, RoundTripIncludingNonFinite) {
  const spec::Catalog catalog = Shipped();
  spec::Catalog small = catalog;
  small.experiments.at(kUpgrade).samples = 200;
  small.experiments.at(kClicks).samples = 200;
  small.experiments.at(kPurchases).samples = 200;
  PipelineResult result = RunPipeline(small, kS1, Seeded(4));
  ASSERT_FALSE(result.experiments.empty());
  result.experiments[0].outcome->statistic = -std::numeric_limits<double>::infinity();
  result.bindings["numeric"] = 2.5;
  const nlohmann::json json = ToJson(result);
  EXPECT_EQ(json["experiments"][0]["outcome"]["statistic"], "-inf");
  auto parsed = PipelineResultFromJson(nlohmann::json::parse(SerializeResult(result)));
  ASSERT_TRUE(parsed.ok()) << parsed.status();
  EXPECT_EQ(*parsed, result);
  EXPECT_EQ(SerializeResult(*parsed), SerializeResult(result));
}

TEST(ResultJsonTest, NumberEncoding) {
  EXPECT_EQ(NumberToJson(std::nan("")), "nan");
  EXPECT_EQ(NumberToJson(INFINITY), "inf");
  EXPECT_EQ(NumberToJson(0.5), 0.5);
  EXPECT_TRUE(std::isnan(*NumberFromJson("nan")));
  EXPECT_FALSE(NumberFromJson("x").ok());
}

TEST(ManagedSystemTest, PurchaseRoutesThroughActiveSetup) {
  const spec::Catalog catalog = Shipped();
  ManagedSystem system(*traffic::SimClock::Create(traffic::ClockMode::kVirtual));
  system.SetSetupCatalog(catalog.setups);
  EXPECT_FALSE(system.Purchase("", "Standard:1").ok());
  ASSERT_TRUE(system.DeploySetup("Recommendation_upgrade").ok());
  ASSERT_TRUE(
      system.ActivateExperiment("ws-recommendation-ab", catalog.experiments.at(kUpgrade), 1)
          .ok());
  auto routed = system.Purchase("", "Standard:1");
  ASSERT_TRUE(routed.ok()) << routed.status();
  auto history = system.GetRequestHistory("ws-recommendation-ab", routed->variant, 0);
  ASSERT_EQ(history->size(), 1u);
  EXPECT_EQ(history->front().client_id, "Standard:1");
  ASSERT_TRUE(system.RemoveSetup("Recommendation_upgrade").ok());
  auto after = system.Purchase("", "Standard:1");
  EXPECT_THAT(std::string(after.status().message()), HasSubstr("no active setup"));
}

}  // namespace
}  // namespace abpipe::loop
