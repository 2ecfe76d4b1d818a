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

#include "abpipe/webstore/web_store.h"

#include <mutex>
#include <utility>

#include <fmt/format.h>
#include "abpipe/common/random.h"

namespace abpipe::webstore {

std::string_view StepName(FlowStep step) {
  switch (step) {
    case FlowStep::kAuthenticate:
      return "authenticate";
    case FlowStep::kStartSession:
      return "startSession";
    case FlowStep::kGetPrice:
      return "getPrice";
    case FlowStep::kUpdateInventory:
      return "updateInventory";
    case FlowStep::kCheckoutOverview:
      return "checkoutOverview";
    case FlowStep::kRecommend:
      return "recommend";
    case FlowStep::kRecordHistory:
      return "recordHistory";
    case FlowStep::kCloseSession:
      return "closeSession";
  }
  return "?";
}

std::string_view StepService(FlowStep step) {
  switch (step) {
    case FlowStep::kAuthenticate:
      return "ws-authentication-service";
    case FlowStep::kStartSession:
    case FlowStep::kCloseSession:
      return "ws-session-service";
    case FlowStep::kGetPrice:
      return "ws-pricing-service";
    case FlowStep::kUpdateInventory:
      return "ws-inventory-service";
    case FlowStep::kCheckoutOverview:
      return "ws-basket-service";
    case FlowStep::kRecommend:
      return "ws-recommendation-service";
    case FlowStep::kRecordHistory:
      return "ws-history-service";
  }
  return "?";
}

void WebStore::SetSetupCatalog(std::map<std::string, spec::SetupSpec> setups) {
  std::unique_lock lock(mu_);
  setups_ = std::move(setups);
}

absl::StatusOr<WebStore::Deployment> WebStore::Instantiate(const spec::SetupSpec& setup) {
  Deployment d;
  d.setup_id = setup.id;
  d.ab_components = setup.ab_components;
  std::map<std::string, int, std::less<>> per_service;
  for (const spec::ServiceInstance& service : setup.services) {
    auto model = setup.variant_models.find(service.variant_model);
    if (model == setup.variant_models.end()) {
      return absl::FailedPreconditionError(fmt::format(
          "{}: unknown variant model {}", service.tag(), service.variant_model));
    }
    absl::StatusOr<LatencySampler> sampler = LatencySampler::Create(model->second.latency);
    if (!sampler.ok()) {
      return absl::FailedPreconditionError(
          fmt::format("{}: {}", service.tag(), std::string(sampler.status().message())));
    }
    d.instances.emplace(service.tag(), Instance{*sampler, model->second.click_uplift_applies});
    if (++per_service[service.name] == 1) {
      d.unique_tag[service.name] = service.tag();
    } else {
      d.unique_tag.erase(service.name);
    }
  }
  // Until an experiment rewires it, A is the first listed version of the
  // service under test and B the last.
  for (const spec::AbComponentSpec& ab : setup.ab_components) {
    Wiring wiring{ab.service_under_test, std::nullopt};
    std::vector<std::string> tags;
    for (const spec::ServiceInstance& service : setup.services) {
      if (service.name == ab.service_under_test) tags.push_back(service.tag());
    }
    if (!tags.empty()) wiring.tags = {tags.front(), tags.back()};
    d.wiring[ab.name] = std::move(wiring);
  }
  for (FlowStep step : kSessionFlow) {
    const std::string_view service = StepService(step);
    if (!per_service.contains(service)) {
      return absl::FailedPreconditionError(
          fmt::format("setup {} has no {} for step {}", setup.id, service, StepName(step)));
    }
    if (d.unique_tag.contains(service)) continue;
    bool under_test = false;
    for (const spec::AbComponentSpec& ab : setup.ab_components) {
      under_test |= ab.service_under_test == service;
    }
    if (!under_test) {
      return absl::FailedPreconditionError(fmt::format(
          "setup {}: {} has several versions but no A/B component", setup.id, service));
    }
  }
  return d;
}

absl::Status WebStore::DeploySetup(std::string_view setup_name) {
  std::unique_lock lock(mu_);
  auto it = setups_.find(std::string(setup_name));
  if (it == setups_.end()) {
    return absl::NotFoundError(fmt::format("unknown setup: {}", setup_name));
  }
  if (active_.has_value()) {
    return absl::FailedPreconditionError(
        fmt::format("setup already active: {}", active_->setup_id));
  }
  absl::StatusOr<Deployment> deployment = Instantiate(it->second);
  if (!deployment.ok()) return deployment.status();
  active_ = std::move(*deployment);
  return absl::OkStatus();
}

absl::Status WebStore::RemoveSetup(std::string_view setup_name) {
  std::unique_lock lock(mu_);
  if (!active_.has_value() || active_->setup_id != setup_name) {
    return absl::FailedPreconditionError(fmt::format("setup not active: {}", setup_name));
  }
  active_.reset();
  return absl::OkStatus();
}

std::optional<std::string> WebStore::active_setup() const {
  std::shared_lock lock(mu_);
  if (!active_) return std::nullopt;
  return active_->setup_id;
}

std::vector<spec::AbComponentSpec> WebStore::ab_components() const {
  std::shared_lock lock(mu_);
  if (!active_) return {};
  return active_->ab_components;
}

absl::Status WebStore::WireAbComponent(std::string_view ab_name, std::string_view tag_a,
                                       std::string_view tag_b) {
  std::unique_lock lock(mu_);
  if (!active_) return absl::FailedPreconditionError("no active setup");
  auto wiring = active_->wiring.find(ab_name);
  if (wiring == active_->wiring.end()) {
    return absl::NotFoundError(fmt::format("unknown A/B component: {}", ab_name));
  }
  for (std::string_view tag : {tag_a, tag_b}) {
    if (!active_->instances.contains(tag)) {
      return absl::NotFoundError(fmt::format("service not in setup: {}", tag));
    }
    if (tag.substr(0, tag.find(':')) != wiring->second.service_under_test) {
      return absl::InvalidArgumentError(fmt::format(
          "{} is not a version of {}", tag, wiring->second.service_under_test));
    }
  }
  wiring->second.tags = {std::string(tag_a), std::string(tag_b)};
  return absl::OkStatus();
}

absl::StatusOr<FlowResult> WebStore::ServePurchaseFlow(std::string_view ab_name,
                                                       Variant variant,
                                                       const StoreRequest& request) const {
  std::shared_lock lock(mu_);
  if (!active_) return absl::UnavailableError("no active setup");
  auto routed = active_->wiring.find(ab_name);
  if (routed == active_->wiring.end()) {
    return absl::NotFoundError(fmt::format("unknown A/B component: {}", ab_name));
  }
  if (!routed->second.tags) {
    return absl::FailedPreconditionError(fmt::format("{} is not wired", ab_name));
  }
  const std::string& routed_tag = (*routed->second.tags)[variant == Variant::kA ? 0 : 1];

  auto instance_for = [&](std::string_view service) -> absl::StatusOr<const Instance*> {
    std::string_view tag;
    if (service == routed->second.service_under_test) {
      tag = routed_tag;
    } else if (auto unique = active_->unique_tag.find(service);
               unique != active_->unique_tag.end()) {
      tag = unique->second;
    } else {
      // Another A/B component's service: serve its baseline.
      for (const auto& [name, wiring] : active_->wiring) {
        if (wiring.service_under_test == service && wiring.tags) tag = (*wiring.tags)[0];
      }
      if (tag.empty()) {
        return absl::FailedPreconditionError(fmt::format("{} is not wired", service));
      }
    }
    return &active_->instances.find(tag)->second;
  };

  StreamRng rng(request.flow_seed);
  FlowResult result;
  result.steps.reserve(kSessionFlow.size());
  for (FlowStep step : kSessionFlow) {
    absl::StatusOr<const Instance*> instance = instance_for(StepService(step));
    if (!instance.ok()) return instance.status();
    const double latency = (*instance)->sampler.Sample(rng);
    result.steps.push_back({step, latency});
    result.response.response_time_ms += latency;
  }

  const bool bonus =
      variant == Variant::kB && active_->instances.find(routed_tag)->second.click_uplift_applies;
  const UserBehavior& b = request.behavior;
  const double click_p =
      b.recommendation_click_probability + (bonus ? b.bonus_recommendation_click_b : 0.0);
  const double rec_purchase_p =
      b.recommendation_purchase_probability + (bonus ? b.bonus_recommendation_purchase_b : 0.0);
  // Always three draws.
  const bool purchased = rng.NextBernoulli(b.purchase_probability);
  const bool clicked = rng.NextBernoulli(click_p);
  const bool rec_purchased = rng.NextBernoulli(rec_purchase_p);
  result.response.outcome = RequestOutcome{clicked, purchased, purchased && rec_purchased};
  return result;
}

absl::StatusOr<ServedResponse> WebStore::Serve(std::string_view ab_name, Variant variant,
                                               const StoreRequest& request) {
  absl::StatusOr<FlowResult> flow = ServePurchaseFlow(ab_name, variant, request);
  if (!flow.ok()) return flow.status();
  return flow->response;
}

}  // namespace abpipe::webstore
