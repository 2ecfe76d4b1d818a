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

#include "abpipe/loop/managed_system.h"

#include <utility>

#include <fmt/format.h>
#include "abpipe/common/hash.h"

namespace abpipe::loop {

ManagedSystem::ManagedSystem(traffic::SimClock clock)
    : clock_(clock),
      generator_(&scheduler_, [this](const StoreRequest& request, uint64_t index, SimTime now) {
        Route(request, index, now);
      }) {}

void ManagedSystem::SetSetupCatalog(std::map<std::string, spec::SetupSpec> setups) {
  store_.SetSetupCatalog(std::move(setups));
}

void ManagedSystem::Route(const StoreRequest& request, uint64_t index, SimTime now) {
  // Failures are counted by the router.
  (void)router_.RouteAndRecord(traffic_ab_, request, index, now);
}

absl::StatusOr<std::vector<RequestRecord>> ManagedSystem::GetRequestHistory(
    std::string_view ab_name, Variant variant, size_t since) {
  return router_.GetRequestHistory(ab_name, variant, since);
}

absl::StatusOr<uint64_t> ManagedSystem::GetHistoryEpoch(std::string_view ab_name) {
  absl::StatusOr<router::ComponentCounters> counters = router_.GetCounters(ab_name);
  if (!counters.ok()) return counters.status();
  return counters->epoch;
}

absl::Status ManagedSystem::DeploySetup(std::string_view setup_name) {
  std::lock_guard lock(sim_mu_);
  if (absl::Status s = store_.DeploySetup(setup_name); !s.ok()) return s;
  for (const spec::AbComponentSpec& ab : store_.ab_components()) {
    router::AbConfig config;
    config.ab_name = ab.name;
    config.service_under_test = ab.service_under_test;
    if (router_.HasComponent(ab.name)) continue;  // kept across redeploys
    if (absl::Status s = router_.AddComponent(config); !s.ok()) return s;
  }
  return absl::OkStatus();
}

absl::Status ManagedSystem::RemoveSetup(std::string_view setup_name) {
  std::lock_guard lock(sim_mu_);
  if (absl::Status s = store_.RemoveSetup(setup_name); !s.ok()) return s;
  generator_.Stop();
  traffic_profile_.reset();
  return absl::OkStatus();
}

absl::Status ManagedSystem::SetAbRouting(std::string_view ab_name, int a, int b) {
  return router_.SetAbRouting(ab_name, a, b);
}

absl::Status ManagedSystem::ClearAbComponentHistory(std::string_view ab_name) {
  return router_.ClearAbComponentHistory(ab_name);
}

absl::Status ManagedSystem::ActivateExperiment(std::string_view ab_name,
                                               const spec::ExperimentSpec& experiment,
                                               uint64_t assignment_seed) {
  std::lock_guard lock(sim_mu_);
  if (!store_.active_setup()) return absl::FailedPreconditionError("no active setup");
  if (absl::Status s = store_.WireAbComponent(ab_name, experiment.variant_a,
                                              experiment.variant_b);
      !s.ok()) {
    return s;
  }
  if (absl::Status s = router_.SetExperiment(ab_name, experiment.id); !s.ok()) return s;
  if (absl::Status s = router_.SetAssignmentSeed(ab_name, assignment_seed); !s.ok()) return s;
  return router_.SetHistoryCapacity(
      ab_name, kHistoryCapacityFactor * static_cast<size_t>(experiment.samples));
}

absl::Status ManagedSystem::SwitchTraffic(std::string_view ab_name,
                                          const spec::UserProfile& profile, uint64_t seed) {
  std::lock_guard lock(sim_mu_);
  if (!store_.active_setup()) return absl::FailedPreconditionError("no active setup");
  if (!router_.HasComponent(ab_name)) {
    return absl::NotFoundError(fmt::format("unknown A/B component: {}", ab_name));
  }
  generator_.Stop();
  traffic_ab_ = std::string(ab_name);
  traffic_profile_ = profile;
  traffic_seed_ = seed;
  return generator_.Start(profile, seed);
}

traffic::GeneratorStats ManagedSystem::StopTraffic() {
  std::lock_guard lock(sim_mu_);
  return generator_.Stop();
}

traffic::GeneratorStats ManagedSystem::traffic_stats() const {
  std::lock_guard lock(sim_mu_);
  return generator_.stats();
}

void ManagedSystem::Advance(absl::Duration d) {
  std::lock_guard lock(sim_mu_);
  clock_.Advance(scheduler_, d);
}

SimTime ManagedSystem::Now() const {
  std::lock_guard lock(sim_mu_);
  return scheduler_.now();
}

absl::StatusOr<router::RoutedResponse> ManagedSystem::Purchase(std::string_view ab_name,
                                                               std::string_view client_id) {
  std::string ab(ab_name);
  StoreRequest request;
  SimTime now;
  uint64_t index;
  {
    std::lock_guard lock(sim_mu_);
    if (!store_.active_setup()) return absl::UnavailableError("no active setup");
    if (ab.empty()) {
      std::vector<spec::AbComponentSpec> components = store_.ab_components();
      if (components.empty()) return absl::FailedPreconditionError("setup has no A/B component");
      ab = components.front().name;
    }
    request.client_id = std::string(client_id);
    if (traffic_profile_) {
      const std::string user_class(client_id.substr(0, client_id.find(':')));
      auto it = traffic_profile_->classes.find(user_class);
      if (it != traffic_profile_->classes.end()) {
        request.behavior = traffic::BehaviorOf(it->second);
      }
    }
    index = external_requests_++;
    request.flow_seed = HashCombine(traffic_seed_, "external", client_id, index);
    now = scheduler_.now();
  }
  return router_.RouteAndRecord(ab, request, index, now);
}

}  // namespace abpipe::loop
