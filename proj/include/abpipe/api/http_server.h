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

#ifndef ABPIPE_API_HTTP_SERVER_H_
#define ABPIPE_API_HTTP_SERVER_H_

#include <memory>
#include <string>

#include <nlohmann/json.hpp>
#include "absl/status/status.h"
#include "abpipe/api/control_service.h"
#include "abpipe/common/request.h"

namespace httplib {
class Server;
}

namespace abpipe::api {

int HttpStatusFor(const absl::Status& status);
nlohmann::json ToJson(const RequestRecord& record);

// JSON endpoints over a ControlService:
//   POST /catalogs/load {directory}          GET  /pipelines
//   POST /runs {pipelineId, seed, clock, start}
//   GET  /runs   GET /runs/{id}/status|summary|results
//   POST /runs/{id}/start|abort
//   GET  /probe/{ab}/history/{variant}?since=N
//   POST /effector/{ab}/routing {a, b}       POST /effector/{ab}/clear
//   POST /effector/setup/{name}/deploy|remove
//   POST /store/purchase {clientId, items, abName}
// Errors carry {"error": message}.
class HttpServer {
 public:
  explicit HttpServer(ControlService* service);
  ~HttpServer();

  // Returns the bound port; 0 picks a free one.
  absl::StatusOr<int> Bind(const std::string& host, int port);
  // Serves until Stop(); call after Bind.
  absl::Status Serve();
  void Stop();

 private:
  void Register();

  ControlService* service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace abpipe::api

#endif  // ABPIPE_API_HTTP_SERVER_H_
