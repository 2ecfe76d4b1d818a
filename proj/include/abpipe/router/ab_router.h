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

#ifndef ABPIPE_ROUTER_AB_ROUTER_H_
#define ABPIPE_ROUTER_AB_ROUTER_H_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "abpipe/common/request.h"
#include "abpipe/common/sim_time.h"

namespace abpipe::router {

enum class AssignmentMode {
  // One variant per client for the whole experiment.
  kSticky,
  // Every request is assigned independently.
  kPerRequest,
};

struct AbConfig {
  std::string ab_name;
  std::string service_under_test;
  int weight_a = 50;
  int weight_b = 50;
  uint64_t seed = 0;
  AssignmentMode mode = AssignmentMode::kSticky;
};

// Where routed requests go. Implemented by the store simulator.
class VariantBackend {
 public:
  virtual ~VariantBackend() = default;
  virtual absl::StatusOr<ServedResponse> Serve(std::string_view ab_name, Variant variant,
                                               const StoreRequest& request) = 0;
};

struct RoutedResponse {
  Variant variant = Variant::kA;
  ServedResponse served;
};

struct ComponentCounters {
  std::array<int64_t, 2> routed{};  // appended to history, by variant
  std::array<int64_t, 2> failed{};  // backend errors or history overflow
  // Requests assigned before a clear that completed after it.
  int64_t stale_dropped = 0;
  uint64_t epoch = 0;
};

// Default history bound per variant when none is configured.
inline constexpr size_t kDefaultHistoryCapacity = 1'000'000;

// The A/B routing component. Holds any number of named A/B components, each
// with its own weights and per-variant request history. RouteAndRecord may be
// called concurrently; probe reads observe a consistent prefix.
class AbRouter {
 public:
  explicit AbRouter(VariantBackend* backend) : backend_(backend) {}

  AbRouter(const AbRouter&) = delete;
  AbRouter& operator=(const AbRouter&) = delete;

  absl::Status AddComponent(const AbConfig& config);
  absl::Status RemoveComponent(std::string_view ab_name);
  bool HasComponent(std::string_view ab_name) const;
  std::vector<std::string> ComponentNames() const;

  absl::StatusOr<Variant> AssignVariant(std::string_view ab_name, std::string_view client_id,
                                        uint64_t request_index = 0) const;

  absl::StatusOr<RoutedResponse> RouteAndRecord(std::string_view ab_name,
                                                const StoreRequest& request,
                                                uint64_t request_index, SimTime now);

  // Records [since, end) of the variant's history in the current epoch.
  absl::StatusOr<std::vector<RequestRecord>> GetRequestHistory(std::string_view ab_name,
                                                               Variant variant,
                                                               size_t since = 0) const;
  absl::StatusOr<std::vector<RequestRecord>> GetRequestHistory(std::string_view ab_name,
                                                               std::string_view variant,
                                                               size_t since = 0) const;

  absl::Status SetAbRouting(std::string_view ab_name, int a, int b);
  absl::Status ClearAbComponentHistory(std::string_view ab_name);

  // Scopes sticky assignment to one experiment.
  absl::Status SetExperiment(std::string_view ab_name, std::string_view experiment_id);
  absl::Status SetAssignmentSeed(std::string_view ab_name, uint64_t seed);
  absl::Status SetHistoryCapacity(std::string_view ab_name, size_t per_variant);

  absl::StatusOr<AbConfig> GetConfig(std::string_view ab_name) const;
  absl::StatusOr<ComponentCounters> GetCounters(std::string_view ab_name) const;

 private:
  struct Component {
    mutable std::shared_mutex mu;
    AbConfig config;
    std::string experiment_id;
    size_t capacity = kDefaultHistoryCapacity;
    std::array<std::vector<RequestRecord>, 2> history;
    ComponentCounters counters;
  };

  absl::StatusOr<std::shared_ptr<Component>> Find(std::string_view ab_name) const;
  static Variant Assign(const Component& c, std::string_view client_id,
                        uint64_t request_index);

  VariantBackend* backend_;
  mutable std::shared_mutex components_mu_;
  std::map<std::string, std::shared_ptr<Component>, std::less<>> components_;
};

absl::Status ValidateWeights(int a, int b);

}  // namespace abpipe::router

#endif  // ABPIPE_ROUTER_AB_ROUTER_H_
