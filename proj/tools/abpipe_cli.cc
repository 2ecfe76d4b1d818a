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

// The abpipe command-line tool.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include "abpipe/api/control_service.h"
#include "abpipe/api/http_server.h"
#include "abpipe/api/run_store.h"
#include "abpipe/loop/result.h"
#include "abpipe/spec/catalog.h"
#include "abpipe/spec/types.h"

namespace {

using abpipe::api::ControlService;
using abpipe::api::ServiceOptions;
using abpipe::loop::RunStatus;

std::atomic<bool> g_interrupted{false};

extern "C" void OnSignal(int) { g_interrupted = true; }

void PrintReport(const abpipe::spec::ValidationReport& report) {
  for (const auto& [kind, n] : report.loaded) fmt::print("loaded {} {}\n", n, kind);
  for (const auto& w : report.warnings) fmt::print("warning: {}: {}\n", w.source, w.message);
  for (const auto& e : report.errors) fmt::print(stderr, "error: {}: {}\n", e.source, e.message);
}

void PrintResult(const abpipe::loop::PipelineResult& result) {
  for (const auto& e : result.experiments) {
    fmt::print("{} (visit {})\n", e.experiment_id, e.visit);
    if (e.outcome) {
      const auto& o = *e.outcome;
      fmt::print("  {} statistic={:.6g} p={:.6g} threshold={} n={}/{} -> {}\n",
                 abpipe::spec::TestTypeName(o.test_type), o.statistic, o.p_value, o.threshold, o.samples_a, o.samples_b,
                 abpipe::stats::DecisionName(o.decision));
    }
    if (e.next) {
      fmt::print("  rule: {} -> {}\n", e.fired_rule.value_or("(none)"), *e.next);
    }
  }
  for (const std::string& w : result.warnings) fmt::print("warning: {}\n", w);
  fmt::print("status: {}", abpipe::loop::RunStatusName(result.status));
  if (!result.end_reason.empty()) fmt::print(" ({})", result.end_reason);
  if (!result.diagnostic.empty()) fmt::print(": {}", result.diagnostic);
  fmt::print("\nvirtual time: {:.3f} s\n", result.ended_at.seconds());
}

int ExitCode(RunStatus status) {
  switch (status) {
    case RunStatus::kEnded:
      return 0;
    case RunStatus::kAborted:
      return 3;
    default:
      return 4;
  }
}

struct RunArgs {
  std::string specs;
  std::string pipeline;
  uint64_t seed = 1;
  bool realtime = false;
  double time_scale = 1.0;
  std::string out;
};

int Run(const RunArgs& args) {
  ServiceOptions options;
  if (!args.out.empty()) options.out_dir = args.out;
  options.time_scale = args.time_scale;
  ControlService service(options);
  auto report = service.LoadCatalogs(args.specs);
  if (!report.ok()) {
    fmt::print(stderr, "error: {}\n", std::string(report.status().message()));
    return 2;
  }
  for (const auto& e : report->errors) fmt::print(stderr, "error: {}: {}\n", e.source, e.message);

  auto run_id = service.StartRun(args.pipeline, args.seed,
                                 args.realtime ? abpipe::traffic::ClockMode::kRealtime
                                               : abpipe::traffic::ClockMode::kVirtual);
  if (!run_id.ok()) {
    fmt::print(stderr, "error: {}\n", std::string(run_id.status().message()));
    return 2;
  }
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  while (true) {
    absl::Status s = service.WaitForRun(*run_id, absl::Milliseconds(200));
    if (s.ok()) break;
    if (g_interrupted.exchange(false)) (void)service.AbortRun(*run_id);
  }
  auto result = service.GetResults(*run_id);
  PrintResult(*result);
  if (options.out_dir) fmt::print("run directory: {}\n", (*options.out_dir / *run_id).string());
  return ExitCode(result->status);
}

int Validate(const std::string& specs) {
  abpipe::spec::ValidationReport report;
  auto catalog = abpipe::spec::LoadCatalogDirectory(specs, report);
  if (!catalog.ok()) {
    fmt::print(stderr, "error: {}\n", std::string(catalog.status().message()));
    return 2;
  }
  abpipe::spec::ValidatePipelines(*catalog, report);
  PrintReport(report);
  return report.ok() ? 0 : 1;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string specs;
  std::string out;
  double time_scale = 1.0;
};

int Serve(const ServeArgs& args) {
  ServiceOptions options;
  if (!args.out.empty()) options.out_dir = args.out;
  options.time_scale = args.time_scale;
  ControlService service(options);
  if (!args.specs.empty()) {
    auto report = service.LoadCatalogs(args.specs);
    if (!report.ok()) {
      fmt::print(stderr, "error: {}\n", std::string(report.status().message()));
      return 2;
    }
    PrintReport(*report);
  }
  abpipe::api::HttpServer server(&service);
  auto port = server.Bind(args.host, args.port);
  if (!port.ok()) {
    fmt::print(stderr, "error: {}\n", std::string(port.status().message()));
    return 2;
  }
  fmt::print("listening on http://{}:{}\n", args.host, *port);
  std::fflush(stdout);
  absl::Status s = server.Serve();
  return s.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous A/B experimentation pipelines on a simulated web store"};
  app.require_subcommand(1);

  RunArgs run;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one pipeline to completion");
  run_cmd->add_option("--specs", run.specs, "Catalog directory")
      ->envname("ABPIPE_SPECS")
      ->required()
      ->check(CLI::ExistingDirectory);
  run_cmd->add_option("--pipeline", run.pipeline, "Pipeline id")
      ->envname("ABPIPE_PIPELINE")
      ->required();
  run_cmd->add_option("--seed", run.seed, "Run seed")->envname("ABPIPE_SEED");
  auto* virtual_flag = run_cmd->add_flag("--virtual-time", "Simulated clock (default)");
  run_cmd->add_flag("--realtime", run.realtime, "Pace the simulation against the wall clock")
      ->excludes(virtual_flag);
  run_cmd->add_option("--time-scale", run.time_scale, "Virtual seconds per wall second")
      ->envname("ABPIPE_TIME_SCALE")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run.out, "Directory for run records")->envname("ABPIPE_OUT");

  std::string validate_specs;
  CLI::App* validate_cmd = app.add_subcommand("validate", "Check a catalog directory");
  validate_cmd->add_option("--specs", validate_specs, "Catalog directory")
      ->envname("ABPIPE_SPECS")
      ->required();

  ServeArgs serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Serve the control API over HTTP");
  serve_cmd->add_option("--port", serve.port, "Port")->envname("ABPIPE_PORT");
  serve_cmd->add_option("--host", serve.host, "Bind address")->envname("ABPIPE_HOST");
  serve_cmd->add_option("--specs", serve.specs, "Catalog directory to load at startup")
      ->envname("ABPIPE_SPECS");
  serve_cmd->add_option("--out", serve.out, "Directory for run records")->envname("ABPIPE_OUT");
  serve_cmd->add_option("--time-scale", serve.time_scale, "Virtual seconds per wall second")
      ->envname("ABPIPE_TIME_SCALE")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (*run_cmd) return Run(run);
  if (*validate_cmd) return Validate(validate_specs);
  return Serve(serve);
}
