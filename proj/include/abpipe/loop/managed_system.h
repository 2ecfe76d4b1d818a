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

#ifndef ABPIPE_LOOP_MANAGED_SYSTEM_H_
#define ABPIPE_LOOP_MANAGED_SYSTEM_H_

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "abpipe/common/request.h"
#include "abpipe/router/ab_router.h"
#include "abpipe/spec/types.h"
#include "abpipe/traffic/generator.h"
#include "abpipe/traffic/scheduler.h"
#include "abpipe/webstore/web_store.h"

namespace abpipe::loop {

// Sensing side of the managed system.
class Probe {
 public:
  virtual ~Probe() = default;
  virtual absl::StatusOr<std::vector<RequestRecord>> GetRequestHistory(
      std::string_view ab_name, Variant variant, size_t since) = 0;
  virtual absl::StatusOr<uint64_t> GetHistoryEpoch(std::string_view ab_name) = 0;
};

// Actuation side of the managed system.
class Effector {
 public:
  virtual ~Effector() = default;
  virtual absl::Status DeploySetup(std::string_view setup_name) = 0;
  virtual absl::Status RemoveSetup(std::string_view setup_name) = 0;
  virtual absl::Status SetAbRouting(std::string_view ab_name, int a, int b) = 0;
  virtual absl::Status ClearAbComponentHistory(std::string_view ab_name) = 0;

  // Wires the A/B component to the experiment's variants and scopes sticky
  // assignment and history capacity to it.
  virtual absl::Status ActivateExperiment(std::string_view ab_name,
                                          const spec::ExperimentSpec& experiment,
                                          uint64_t assignment_seed) = 0;
  // Replaces any running traffic with `profile`, sent through `ab_name`.
  virtual absl::Status SwitchTraffic(std::string_view ab_name,
                                     const spec::UserProfile& profile, uint64_t seed) = 0;
  virtual traffic::GeneratorStats StopTraffic() = 0;
};

// Moves simulated time forward.
class SimulationDriver {
 public:
  virtual ~SimulationDriver() = default;
  virtual void Advance(absl::Duration d) = 0;
  virtual SimTime Now() const = 0;
};

// History slots per variant relative to the sample budget.
inline constexpr size_t kHistoryCapacityFactor = 4;

// The simulated web store together with its A/B router and the synthetic
// users driving it. All public methods are thread-safe.
class ManagedSystem : public Probe, public Effector, public SimulationDriver {
 public:
  explicit ManagedSystem(traffic::SimClock clock);

  void SetSetupCatalog(std::map<std::string, spec::SetupSpec> setups);

  absl::StatusOr<std::vector<RequestRecord>> GetRequestHistory(std::string_view ab_name,
                                                               Variant variant,
                                                               size_t since) override;
  absl::StatusOr<uint64_t> GetHistoryEpoch(std::string_view ab_name) override;

  absl::Status DeploySetup(std::string_view setup_name) override;
  absl::Status RemoveSetup(std::string_view setup_name) override;
  absl::Status SetAbRouting(std::string_view ab_name, int a, int b) override;
  absl::Status ClearAbComponentHistory(std::string_view ab_name) override;
  absl::Status ActivateExperiment(std::string_view ab_name,
                                  const spec::ExperimentSpec& experiment,
                                  uint64_t assignment_seed) override;
  absl::Status SwitchTraffic(std::string_view ab_name, const spec::UserProfile& profile,
                             uint64_t seed) override;
  traffic::GeneratorStats StopTraffic() override;

  void Advance(absl::Duration d) override;
  SimTime Now() const override;

  // A purchase from an external client through `ab_name` (the first A/B
  // component when empty). The behaviour is that of the client's user class
  // in the running traffic profile, or no purchase intent at all.
  absl::StatusOr<router::RoutedResponse> Purchase(std::string_view ab_name,
                                                  std::string_view client_id);

  std::optional<std::string> active_setup() const { return store_.active_setup(); }
  const router::AbRouter& router() const { return router_; }
  traffic::GeneratorStats traffic_stats() const;

 private:
  void Route(const StoreRequest& request, uint64_t index, SimTime now);

  webstore::WebStore store_;
  router::AbRouter router_{&store_};

  // Guards the simulation state below.
  mutable std::mutex sim_mu_;
  traffic::EventScheduler scheduler_;
  traffic::SimClock clock_;
  traffic::TrafficGenerator generator_;
  std::string traffic_ab_;
  std::optional<spec::UserProfile> traffic_profile_;
  uint64_t traffic_seed_ = 0;
  uint64_t external_requests_ = 0;
};

}  // namespace abpipe::loop

#endif  // ABPIPE_LOOP_MANAGED_SYSTEM_H_
