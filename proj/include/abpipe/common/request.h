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

#ifndef ABPIPE_COMMON_REQUEST_H_
#define ABPIPE_COMMON_REQUEST_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "abpipe/common/sim_time.h"

namespace abpipe {

enum class Variant { kA, kB };

std::string_view VariantName(Variant v);
absl::StatusOr<Variant> ParseVariant(std::string_view name);

// Per-request behavior of the simulated end user, taken from the user class
// that issued the request. Bonuses apply only when served by variant B.
struct UserBehavior {
  double purchase_probability = 0.0;
  double recommendation_click_probability = 0.0;
  double recommendation_purchase_probability = 0.0;
  double bonus_recommendation_click_b = 0.0;
  double bonus_recommendation_purchase_b = 0.0;
};

struct StoreRequest {
  std::string client_id;
  std::string url = "/store/purchase";
  UserBehavior behavior;
  // Seed of the flow's private random stream.
  uint64_t flow_seed = 0;
};

struct RequestOutcome {
  bool recommendation_clicked = false;
  bool purchased = false;
  // Only possible when `purchased`: the basket also held the recommended item.
  bool recommendation_purchased = false;

  bool operator==(const RequestOutcome&) const = default;
};

struct ServedResponse {
  double response_time_ms = 0.0;
  RequestOutcome outcome;
};

// One observed invocation through an A/B component.
struct RequestRecord {
  std::string client_id;
  std::string url;
  Variant variant = Variant::kA;
  double response_time_ms = 0.0;
  SimTime timestamp;
  // History epoch the record was appended in; bumps on every clear.
  uint64_t epoch = 0;
  std::optional<RequestOutcome> outcome;

  bool operator==(const RequestRecord&) const = default;
};

}  // namespace abpipe

#endif  // ABPIPE_COMMON_REQUEST_H_
