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

#ifndef ABPIPE_WEBSTORE_WEB_STORE_H_
#define ABPIPE_WEBSTORE_WEB_STORE_H_

#include <array>
#include <map>
#include <shared_mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "abpipe/common/request.h"
#include "abpipe/router/ab_router.h"
#include "abpipe/spec/types.h"
#include "abpipe/webstore/latency.h"

namespace abpipe::webstore {

enum class FlowStep {
  kAuthenticate,
  kStartSession,
  kGetPrice,
  kUpdateInventory,
  kCheckoutOverview,
  kRecommend,
  kRecordHistory,
  kCloseSession,
};

inline constexpr std::array<FlowStep, 8> kSessionFlow = {
    FlowStep::kAuthenticate,     FlowStep::kStartSession, FlowStep::kGetPrice,
    FlowStep::kUpdateInventory,  FlowStep::kCheckoutOverview, FlowStep::kRecommend,
    FlowStep::kRecordHistory,    FlowStep::kCloseSession,
};

std::string_view StepName(FlowStep step);
// Service that handles the step in the store topology.
std::string_view StepService(FlowStep step);

struct StepLatency {
  FlowStep step;
  double latency_ms;
};

struct FlowResult {
  ServedResponse response;
  std::vector<StepLatency> steps;
};

// The simulated web store. Holds a catalog of setups; at most one is deployed.
// Thread-safe: flows may be served concurrently with each other, and deploy,
// remove and wiring are serialized with flows.
class WebStore : public router::VariantBackend {
 public:
  void SetSetupCatalog(std::map<std::string, spec::SetupSpec> setups);

  absl::Status DeploySetup(std::string_view setup_name);
  absl::Status RemoveSetup(std::string_view setup_name);
  std::optional<std::string> active_setup() const;
  // A/B components of the active setup.
  std::vector<spec::AbComponentSpec> ab_components() const;

  // Points an A/B component at the two service instances ("name:version")
  // compared by the running experiment.
  absl::Status WireAbComponent(std::string_view ab_name, std::string_view tag_a,
                               std::string_view tag_b);

  // One purchase session. Total response time is the exact sum of the step
  // latencies; the recommend step uses the routed variant's model.
  absl::StatusOr<FlowResult> ServePurchaseFlow(std::string_view ab_name, Variant variant,
                                               const StoreRequest& request) const;

  absl::StatusOr<ServedResponse> Serve(std::string_view ab_name, Variant variant,
                                       const StoreRequest& request) override;

 private:
  struct Instance {
    LatencySampler sampler;
    bool click_uplift_applies = false;
  };
  struct Wiring {
    std::string service_under_test;
    std::optional<std::array<std::string, 2>> tags;
  };
  struct Deployment {
    std::string setup_id;
    std::map<std::string, Instance, std::less<>> instances;  // by tag
    // Service name -> its tag when the service has a single instance.
    std::map<std::string, std::string, std::less<>> unique_tag;
    std::map<std::string, Wiring, std::less<>> wiring;  // by A/B component
    std::vector<spec::AbComponentSpec> ab_components;
  };

  static absl::StatusOr<Deployment> Instantiate(const spec::SetupSpec& setup);

  mutable std::shared_mutex mu_;
  std::map<std::string, spec::SetupSpec> setups_;
  std::optional<Deployment> active_;
};

}  // namespace abpipe::webstore

#endif  // ABPIPE_WEBSTORE_WEB_STORE_H_
