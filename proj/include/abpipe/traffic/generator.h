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

#ifndef ABPIPE_TRAFFIC_GENERATOR_H_
#define ABPIPE_TRAFFIC_GENERATOR_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "abpipe/common/random.h"
#include "abpipe/common/request.h"
#include "abpipe/spec/types.h"
#include "abpipe/traffic/scheduler.h"

namespace abpipe::traffic {

struct GeneratorStats {
  int64_t requests_sent = 0;
  std::map<std::string, int64_t> by_class;

  bool operator==(const GeneratorStats&) const = default;
};

// Receives each generated request at its virtual arrival time.
using RequestSink =
    std::function<void(const StoreRequest& request, uint64_t request_index, SimTime now)>;

UserBehavior BehaviorOf(const spec::UserClass& user_class);

// Open-loop synthetic users. Every client of every class issues requests with
// exponential inter-arrival times of the class mean. Client ids are
// "<class>:<index>". A client's arrivals and each request's flow stream are
// derived from (seed, clientId[, requestIndex]). The request sequence is a
// function of the profile and the seed.
class TrafficGenerator {
 public:
  TrafficGenerator(EventScheduler* scheduler, RequestSink sink)
      : scheduler_(scheduler), sink_(std::move(sink)) {}

  TrafficGenerator(const TrafficGenerator&) = delete;
  TrafficGenerator& operator=(const TrafficGenerator&) = delete;

  // Fails if already running or the profile is unusable.
  absl::Status Start(const spec::UserProfile& profile, uint64_t seed);

  // Cancels pending arrivals. Idempotent: later calls return the same stats.
  GeneratorStats Stop();

  bool running() const { return running_; }
  const GeneratorStats& stats() const { return stats_; }

 private:
  struct Client {
    std::string id;
    std::string user_class;
    UserBehavior behavior;
    double mean_seconds = 1.0;
    StreamRng arrivals{0};
    uint64_t next_request = 0;
  };

  void ScheduleNext(size_t client, SimTime from);
  void Fire(size_t client, SimTime at);

  EventScheduler* scheduler_;
  RequestSink sink_;
  bool running_ = false;
  uint64_t seed_ = 0;
  uint64_t generation_ = 0;
  std::vector<Client> clients_;
  GeneratorStats stats_;
};

}  // namespace abpipe::traffic

#endif  // ABPIPE_TRAFFIC_GENERATOR_H_
