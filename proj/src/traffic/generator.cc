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

#include "abpipe/traffic/generator.h"

#include <cmath>
#include <utility>

#include <fmt/format.h>
#include "abpipe/common/hash.h"

namespace abpipe::traffic {
namespace {

// Owner tags keep generations apart from anything else on the scheduler.
constexpr uint64_t kOwnerBase = 0x7472616666696300ULL;

}  // namespace

UserBehavior BehaviorOf(const spec::UserClass& c) {
  return UserBehavior{c.probability_purchase, c.recommendation_click_probability,
                      c.recommendation_purchase_probability, c.bonus_recommendation_click_b,
                      c.bonus_recommendation_purchase_b};
}

absl::Status TrafficGenerator::Start(const spec::UserProfile& profile, uint64_t seed) {
  if (running_) return absl::FailedPreconditionError("traffic already running");
  std::vector<Client> clients;
  for (const auto& [name, user_class] : profile.classes) {
    if (user_class.count < 0 || !(user_class.mean_seconds_between_request > 0)) {
      return absl::InvalidArgumentError(
          fmt::format("user class {}: needs count >= 0 and a positive mean", name));
    }
    for (int i = 0; i < user_class.count; ++i) {
      Client client;
      client.id = fmt::format("{}:{}", name, i);
      client.user_class = name;
      client.behavior = BehaviorOf(user_class);
      client.mean_seconds = user_class.mean_seconds_between_request;
      client.arrivals = StreamRng(HashCombine(seed, client.id));
      clients.push_back(std::move(client));
    }
  }
  clients_ = std::move(clients);
  seed_ = seed;
  ++generation_;
  stats_ = GeneratorStats{};
  for (const auto& [name, unused] : profile.classes) stats_.by_class[name] = 0;
  running_ = true;
  const SimTime now = scheduler_->now();
  for (size_t i = 0; i < clients_.size(); ++i) ScheduleNext(i, now);
  return absl::OkStatus();
}

void TrafficGenerator::ScheduleNext(size_t client, SimTime from) {
  Client& c = clients_[client];
  const double gap = -c.mean_seconds * std::log1p(-c.arrivals.NextUniform());
  const auto nanos = static_cast<int64_t>(std::llround(gap * 1e9));
  const uint64_t generation = generation_;
  scheduler_->Schedule(
      from + absl::Nanoseconds(nanos),
      [this, client, generation](SimTime at) {
        if (running_ && generation == generation_) Fire(client, at);
      },
      kOwnerBase + generation);
}

void TrafficGenerator::Fire(size_t client, SimTime at) {
  Client& c = clients_[client];
  StoreRequest request;
  request.client_id = c.id;
  request.behavior = c.behavior;
  const uint64_t index = c.next_request++;
  request.flow_seed = HashCombine(seed_, c.id, index);
  ++stats_.requests_sent;
  ++stats_.by_class[c.user_class];
  ScheduleNext(client, at);
  sink_(request, index, at);
}

GeneratorStats TrafficGenerator::Stop() {
  if (running_) {
    running_ = false;
    scheduler_->CancelOwner(kOwnerBase + generation_);
  }
  return stats_;
}

}  // namespace abpipe::traffic
