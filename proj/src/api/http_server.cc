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

#include "abpipe/api/http_server.h"

#include <charconv>
#include <optional>

#include <fmt/format.h>
#include <httplib.h>
#include "abpipe/common/status_macros.h"
#include "abpipe/loop/result.h"
#include "abpipe/spec/parse.h"

namespace abpipe::api {
namespace {

void Reply(httplib::Response& res, int code, const nlohmann::json& body) {
  res.status = code;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(httplib::Response& res, const absl::Status& status) {
  Reply(res, HttpStatusFor(status), {{"error", std::string(status.message())}});
}

void ReplyOk(httplib::Response& res, const nlohmann::json& body) { Reply(res, 200, body); }

absl::StatusOr<nlohmann::json> Body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  nlohmann::json json = nlohmann::json::parse(req.body, nullptr, false);
  if (json.is_discarded() || !json.is_object()) {
    return absl::InvalidArgumentError("request body must be a JSON object");
  }
  return json;
}

template <typename T>
absl::StatusOr<T> Field(const nlohmann::json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end()) return absl::InvalidArgumentError(fmt::format("missing field: {}", name));
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    return absl::InvalidArgumentError(fmt::format("bad field: {}", name));
  }
}

template <typename T>
absl::StatusOr<T> OptionalField(const nlohmann::json& body, const char* name, T fallback) {
  if (!body.contains(name)) return fallback;
  return Field<T>(body, name);
}

absl::StatusOr<uint64_t> ParseIndex(const std::string& text) {
  uint64_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    return absl::InvalidArgumentError(fmt::format("not a non-negative integer: {}", text));
  }
  return value;
}

nlohmann::json ToJson(const RequestOutcome& o) {
  return {{"recommendationClicked", o.recommendation_clicked},
          {"purchased", o.purchased},
          {"recommendationPurchased", o.recommendation_purchased}};
}

// Wraps a handler whose failures become error replies.
template <typename F>
httplib::Server::Handler Handle(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    absl::StatusOr<nlohmann::json> body = f(req);
    if (body.ok()) {
      ReplyOk(res, *body);
    } else {
      ReplyError(res, body.status());
    }
  };
}

}  // namespace

int HttpStatusFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 200;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
      return 400;
    case absl::StatusCode::kNotFound:
      return 404;
    case absl::StatusCode::kAlreadyExists:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kAborted:
      return 409;
    case absl::StatusCode::kResourceExhausted:
      return 429;
    case absl::StatusCode::kUnavailable:
      return 503;
    case absl::StatusCode::kDeadlineExceeded:
      return 504;
    default:
      return 500;
  }
}

nlohmann::json ToJson(const RequestRecord& r) {
  return {{"clientId", r.client_id},
          {"url", r.url},
          {"variant", VariantName(r.variant)},
          {"responseTimeMs", r.response_time_ms},
          {"timestampNs", r.timestamp.nanos()},
          {"epoch", r.epoch},
          {"outcome", r.outcome ? ToJson(*r.outcome) : nlohmann::json(nullptr)}};
}

HttpServer::HttpServer(ControlService* service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  Register();
}

HttpServer::~HttpServer() { Stop(); }

absl::StatusOr<int> HttpServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) return absl::UnavailableError(fmt::format("cannot bind {}", host));
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    return absl::UnavailableError(fmt::format("cannot bind {}:{}", host, port));
  }
  return port;
}

absl::Status HttpServer::Serve() {
  if (!server_->listen_after_bind()) return absl::InternalError("server stopped with an error");
  return absl::OkStatus();
}

void HttpServer::Stop() { server_->stop(); }

void HttpServer::Register() {
  ControlService* svc = service_;
  httplib::Server& s = *server_;

  s.Post("/catalogs/load", Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
    ABPIPE_ASSIGN_OR_RETURN(nlohmann::json body, Body(req));
    ABPIPE_ASSIGN_OR_RETURN(std::string dir, Field<std::string>(body, "directory"));
    ABPIPE_ASSIGN_OR_RETURN(spec::ValidationReport report, svc->LoadCatalogs(dir));
    return spec::ToJson(report);
  }));

  s.Get("/pipelines", Handle([svc](const httplib::Request&) -> absl::StatusOr<nlohmann::json> {
    nlohmann::json out = nlohmann::json::array();
    for (const spec::PipelineSpec& p : svc->ListPipelines()) out.push_back(spec::ToJson(p));
    return out;
  }));

  s.Post("/runs", Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
    ABPIPE_ASSIGN_OR_RETURN(nlohmann::json body, Body(req));
    ABPIPE_ASSIGN_OR_RETURN(std::string pipeline, Field<std::string>(body, "pipelineId"));
    ABPIPE_ASSIGN_OR_RETURN(uint64_t seed, OptionalField<uint64_t>(body, "seed", 1));
    ABPIPE_ASSIGN_OR_RETURN(std::string clock_name,
                            OptionalField<std::string>(body, "clock", "virtual"));
    ABPIPE_ASSIGN_OR_RETURN(bool start, OptionalField<bool>(body, "start", true));
    ABPIPE_ASSIGN_OR_RETURN(traffic::ClockMode clock, ParseClockMode(clock_name));
    ABPIPE_ASSIGN_OR_RETURN(std::string run_id, svc->PrepareRun(pipeline, seed, clock));
    if (start) ABPIPE_RETURN_IF_ERROR(svc->LaunchRun(run_id));
    ABPIPE_ASSIGN_OR_RETURN(RunStatusView view, svc->GetStatus(run_id));
    return ToJson(view.record);
  }));

  s.Get("/runs", Handle([svc](const httplib::Request&) -> absl::StatusOr<nlohmann::json> {
    nlohmann::json out = nlohmann::json::array();
    for (const RunRecord& r : svc->ListRuns()) out.push_back(ToJson(r));
    return out;
  }));

  s.Get(R"(/runs/([^/]+)/status)",
        Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
          ABPIPE_ASSIGN_OR_RETURN(RunStatusView view, svc->GetStatus(req.matches[1].str()));
          return ToJson(view);
        }));

  s.Get(R"(/runs/([^/]+)/summary)",
        Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
          ABPIPE_ASSIGN_OR_RETURN(LiveSummary summary, svc->GetLiveSummary(req.matches[1].str()));
          return ToJson(summary);
        }));

  // The body is the persisted result encoding.
  s.Get(R"(/runs/([^/]+)/results)", [svc](const httplib::Request& req, httplib::Response& res) {
    absl::StatusOr<loop::PipelineResult> result = svc->GetResults(req.matches[1].str());
    if (!result.ok()) return ReplyError(res, result.status());
    res.status = 200;
    res.set_content(loop::SerializeResult(*result), "application/json");
  });

  s.Post(R"(/runs/([^/]+)/start)",
         Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
           ABPIPE_RETURN_IF_ERROR(svc->LaunchRun(req.matches[1].str()));
           ABPIPE_ASSIGN_OR_RETURN(RunStatusView view, svc->GetStatus(req.matches[1].str()));
           return ToJson(view.record);
         }));

  s.Post(R"(/runs/([^/]+)/abort)",
         Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
           ABPIPE_RETURN_IF_ERROR(svc->AbortRun(req.matches[1].str()));
           ABPIPE_ASSIGN_OR_RETURN(RunStatusView view, svc->GetStatus(req.matches[1].str()));
           return ToJson(view.record);
         }));

  s.Get(R"(/probe/([^/]+)/history/([^/]+))",
        Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
          const std::string ab = req.matches[1].str();
          ABPIPE_ASSIGN_OR_RETURN(Variant variant, ParseVariant(req.matches[2].str()));
          uint64_t since = 0;
          if (req.has_param("since")) {
            ABPIPE_ASSIGN_OR_RETURN(since, ParseIndex(req.get_param_value("since")));
          }
          std::shared_ptr<loop::ManagedSystem> system = svc->system();
          ABPIPE_ASSIGN_OR_RETURN(uint64_t epoch, system->GetHistoryEpoch(ab));
          ABPIPE_ASSIGN_OR_RETURN(std::vector<RequestRecord> records,
                                  system->GetRequestHistory(ab, variant, since));
          nlohmann::json out = nlohmann::json::array();
          for (const RequestRecord& r : records) out.push_back(ToJson(r));
          return nlohmann::json{{"abName", ab},
                                {"variant", VariantName(variant)},
                                {"since", since},
                                {"epoch", epoch},
                                {"records", std::move(out)}};
        }));

  s.Post(R"(/effector/setup/([^/]+)/deploy)",
         Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
           ABPIPE_RETURN_IF_ERROR(svc->DeploySetup(req.matches[1].str()));
           return nlohmann::json{{"activeSetup", req.matches[1].str()}};
         }));

  s.Post(R"(/effector/setup/([^/]+)/remove)",
         Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
           ABPIPE_RETURN_IF_ERROR(svc->RemoveSetup(req.matches[1].str()));
           return nlohmann::json{{"activeSetup", nullptr}};
         }));

  s.Post(R"(/effector/([^/]+)/routing)",
         Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
           ABPIPE_ASSIGN_OR_RETURN(nlohmann::json body, Body(req));
           ABPIPE_ASSIGN_OR_RETURN(int a, Field<int>(body, "a"));
           ABPIPE_ASSIGN_OR_RETURN(int b, Field<int>(body, "b"));
           ABPIPE_RETURN_IF_ERROR(svc->system()->SetAbRouting(req.matches[1].str(), a, b));
           return nlohmann::json{{"abName", req.matches[1].str()}, {"a", a}, {"b", b}};
         }));

  s.Post(R"(/effector/([^/]+)/clear)",
         Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
           std::shared_ptr<loop::ManagedSystem> system = svc->system();
           const std::string ab = req.matches[1].str();
           ABPIPE_RETURN_IF_ERROR(system->ClearAbComponentHistory(ab));
           ABPIPE_ASSIGN_OR_RETURN(uint64_t epoch, system->GetHistoryEpoch(ab));
           return nlohmann::json{{"abName", ab}, {"epoch", epoch}};
         }));

  s.Post("/store/purchase", Handle([svc](const httplib::Request& req) -> absl::StatusOr<nlohmann::json> {
    ABPIPE_ASSIGN_OR_RETURN(nlohmann::json body, Body(req));
    ABPIPE_ASSIGN_OR_RETURN(std::string client, Field<std::string>(body, "clientId"));
    ABPIPE_ASSIGN_OR_RETURN(std::vector<std::string> items,
                            OptionalField<std::vector<std::string>>(body, "items", {}));
    ABPIPE_ASSIGN_OR_RETURN(std::string ab, OptionalField<std::string>(body, "abName", ""));
    if (client.empty()) return absl::InvalidArgumentError("clientId must not be empty");
    ABPIPE_ASSIGN_OR_RETURN(router::RoutedResponse routed, svc->system()->Purchase(ab, client));
    return nlohmann::json{{"clientId", client},
                          {"items", items},
                          {"variant", VariantName(routed.variant)},
                          {"responseTimeMs", routed.served.response_time_ms},
                          {"outcome", ToJson(routed.served.outcome)}};
  }));
}

}  // namespace abpipe::api
