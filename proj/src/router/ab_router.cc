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

#include "abpipe/router/ab_router.h"

#include <mutex>
#include <utility>

#include <fmt/format.h>
#include "abpipe/common/hash.h"

namespace abpipe::router {
namespace {

size_t Index(Variant v) { return v == Variant::kA ? 0 : 1; }

}  // namespace

absl::Status ValidateWeights(int a, int b) {
  if (a < 0 || b < 0 || a + b != 100) {
    return absl::InvalidArgumentError(
        fmt::format("weights must be non-negative and sum to 100, got {}/{}", a, b));
  }
  return absl::OkStatus();
}

absl::Status AbRouter::AddComponent(const AbConfig& config) {
  if (config.ab_name.empty()) return absl::InvalidArgumentError("empty A/B component name");
  if (absl::Status s = ValidateWeights(config.weight_a, config.weight_b); !s.ok()) return s;
  std::unique_lock lock(components_mu_);
  if (components_.contains(config.ab_name)) {
    return absl::AlreadyExistsError(fmt::format("A/B component exists: {}", config.ab_name));
  }
  auto component = std::make_shared<Component>();
  component->config = config;
  components_.emplace(config.ab_name, std::move(component));
  return absl::OkStatus();
}

absl::Status AbRouter::RemoveComponent(std::string_view ab_name) {
  std::unique_lock lock(components_mu_);
  auto it = components_.find(ab_name);
  if (it == components_.end()) {
    return absl::NotFoundError(fmt::format("unknown A/B component: {}", ab_name));
  }
  components_.erase(it);
  return absl::OkStatus();
}

bool AbRouter::HasComponent(std::string_view ab_name) const {
  std::shared_lock lock(components_mu_);
  return components_.contains(ab_name);
}

std::vector<std::string> AbRouter::ComponentNames() const {
  std::shared_lock lock(components_mu_);
  std::vector<std::string> names;
  for (const auto& [name, unused] : components_) names.push_back(name);
  return names;
}

absl::StatusOr<std::shared_ptr<AbRouter::Component>> AbRouter::Find(std::string_view ab_name) const {
  std::shared_lock lock(components_mu_);
  auto it = components_.find(ab_name);
  if (it == components_.end()) {
    return absl::NotFoundError(fmt::format("unknown A/B component: {}", ab_name));
  }
  return it->second;
}

Variant AbRouter::Assign(const Component& c, std::string_view client_id,
                         uint64_t request_index) {
  uint64_t h = HashCombine(c.config.seed, c.experiment_id, client_id);
  if (c.config.mode == AssignmentMode::kPerRequest) h = HashCombine(h, request_index);
  return static_cast<int>(h % 100) < c.config.weight_a ? Variant::kA : Variant::kB;
}

absl::StatusOr<Variant> AbRouter::AssignVariant(std::string_view ab_name,
                                                std::string_view client_id,
                                                uint64_t request_index) const {
  absl::StatusOr<std::shared_ptr<Component>> c = Find(ab_name);
  if (!c.ok()) return c.status();
  std::shared_lock lock((*c)->mu);
  return Assign(**c, client_id, request_index);
}

absl::StatusOr<RoutedResponse> AbRouter::RouteAndRecord(std::string_view ab_name,
                                                        const StoreRequest& request,
                                                        uint64_t request_index,
                                                        SimTime now) {
  absl::StatusOr<std::shared_ptr<Component>> found = Find(ab_name);
  if (!found.ok()) return found.status();
  Component& c = **found;

  Variant variant;
  uint64_t epoch;
  {
    std::shared_lock lock(c.mu);
    variant = Assign(c, request.client_id, request_index);
    epoch = c.counters.epoch;
  }

  absl::StatusOr<ServedResponse> served = backend_->Serve(ab_name, variant, request);

  std::unique_lock lock(c.mu);
  const size_t slot = Index(variant);
  if (!served.ok()) {
    ++c.counters.failed[slot];
    return served.status();
  }
  if (c.counters.epoch != epoch) {
    ++c.counters.stale_dropped;
    return absl::AbortedError("history cleared while the request was in flight");
  }
  std::vector<RequestRecord>& history = c.history[slot];
  if (history.size() >= c.capacity) {
    ++c.counters.failed[slot];
    return absl::ResourceExhaustedError(
        fmt::format("{} history for variant {} is full ({} records)", ab_name,
                    VariantName(variant), c.capacity));
  }
  RequestRecord record;
  record.client_id = request.client_id;
  record.url = request.url;
  record.variant = variant;
  record.response_time_ms = served->response_time_ms;
  record.timestamp = now;
  record.epoch = epoch;
  record.outcome = served->outcome;
  history.push_back(std::move(record));
  ++c.counters.routed[slot];
  return RoutedResponse{variant, *served};
}

absl::StatusOr<std::vector<RequestRecord>> AbRouter::GetRequestHistory(
    std::string_view ab_name, Variant variant, size_t since) const {
  absl::StatusOr<std::shared_ptr<Component>> c = Find(ab_name);
  if (!c.ok()) return c.status();
  std::shared_lock lock((*c)->mu);
  const std::vector<RequestRecord>& history = (*c)->history[Index(variant)];
  if (since >= history.size()) return std::vector<RequestRecord>{};
  return std::vector<RequestRecord>(history.begin() + static_cast<ptrdiff_t>(since),
                                    history.end());
}

absl::StatusOr<std::vector<RequestRecord>> AbRouter::GetRequestHistory(
    std::string_view ab_name, std::string_view variant, size_t since) const {
  absl::StatusOr<Variant> v = ParseVariant(variant);
  if (!v.ok()) return v.status();
  return GetRequestHistory(ab_name, *v, since);
}

absl::Status AbRouter::SetAbRouting(std::string_view ab_name, int a, int b) {
  if (absl::Status s = ValidateWeights(a, b); !s.ok()) return s;
  absl::StatusOr<std::shared_ptr<Component>> c = Find(ab_name);
  if (!c.ok()) return c.status();
  std::unique_lock lock((*c)->mu);
  (*c)->config.weight_a = a;
  (*c)->config.weight_b = b;
  return absl::OkStatus();
}

absl::Status AbRouter::ClearAbComponentHistory(std::string_view ab_name) {
  absl::StatusOr<std::shared_ptr<Component>> c = Find(ab_name);
  if (!c.ok()) return c.status();
  std::unique_lock lock((*c)->mu);
  for (auto& history : (*c)->history) {
    history.clear();
    history.shrink_to_fit();
  }
  (*c)->counters.routed = {};
  (*c)->counters.failed = {};
  ++(*c)->counters.epoch;
  return absl::OkStatus();
}

absl::Status AbRouter::SetExperiment(std::string_view ab_name, std::string_view experiment_id) {
  absl::StatusOr<std::shared_ptr<Component>> c = Find(ab_name);
  if (!c.ok()) return c.status();
  std::unique_lock lock((*c)->mu);
  (*c)->experiment_id = std::string(experiment_id);
  return absl::OkStatus();
}

absl::Status AbRouter::SetAssignmentSeed(std::string_view ab_name, uint64_t seed) {
  absl::StatusOr<std::shared_ptr<Component>> c = Find(ab_name);
  if (!c.ok()) return c.status();
  std::unique_lock lock((*c)->mu);
  (*c)->config.seed = seed;
  return absl::OkStatus();
}

absl::Status AbRouter::SetHistoryCapacity(std::string_view ab_name, size_t per_variant) {
  if (per_variant == 0) return absl::InvalidArgumentError("history capacity must be positive");
  absl::StatusOr<std::shared_ptr<Component>> c = Find(ab_name);
  if (!c.ok()) return c.status();
  std::unique_lock lock((*c)->mu);
  (*c)->capacity = per_variant;
  return absl::OkStatus();
}

absl::StatusOr<AbConfig> AbRouter::GetConfig(std::string_view ab_name) const {
  absl::StatusOr<std::shared_ptr<Component>> c = Find(ab_name);
  if (!c.ok()) return c.status();
  std::shared_lock lock((*c)->mu);
  return (*c)->config;
}

absl::StatusOr<ComponentCounters> AbRouter::GetCounters(std::string_view ab_name) const {
  absl::StatusOr<std::shared_ptr<Component>> c = Find(ab_name);
  if (!c.ok()) return c.status();
  std::shared_lock lock((*c)->mu);
  return (*c)->counters;
}

}  // namespace abpipe::router
