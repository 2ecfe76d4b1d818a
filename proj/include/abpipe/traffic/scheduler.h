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

#ifndef ABPIPE_TRAFFIC_SCHEDULER_H_
#define ABPIPE_TRAFFIC_SCHEDULER_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "abpipe/common/sim_time.h"

namespace abpipe::traffic {

// Discrete-event scheduler. Events fire in (time, scheduling order) order, so
// advancing in several steps fires exactly the same sequence as one step.
// Not thread-safe; one logical thread drives it.
class EventScheduler {
 public:
  using Callback = std::function<void(SimTime)>;

  SimTime now() const { return now_; }
  size_t pending() const { return queue_.size(); }

  // Events in the past are clamped to now. `owner` groups events for
  // CancelOwner.
  void Schedule(SimTime at, Callback callback, uint64_t owner = 0);

  // Fires every event with time <= until, then sets now to until. Returns the
  // number of events fired.
  int64_t AdvanceTo(SimTime until);
  int64_t AdvanceBy(absl::Duration d) { return AdvanceTo(now_ + d); }

  // Drops pending events scheduled by `owner`.
  void CancelOwner(uint64_t owner);

 private:
  struct Event {
    SimTime at;
    uint64_t seq;
    uint64_t owner;
    Callback callback;
  };
  struct Later {
    bool operator()(const Event& x, const Event& y) const {
      if (x.at != y.at) return x.at > y.at;
      return x.seq > y.seq;
    }
  };

  SimTime now_;
  uint64_t next_seq_ = 0;
  std::vector<Event> queue_;  // heap ordered by Later
};

enum class ClockMode { kVirtual, kRealtime };

// Drives a scheduler. Virtual mode runs as fast as possible; realtime mode
// paces virtual time at `scale` virtual seconds per wall second. The fired
// event sequence is the same in both modes.
class SimClock {
 public:
  static absl::StatusOr<SimClock> Create(ClockMode mode, double scale = 1.0);

  ClockMode mode() const { return mode_; }
  double scale() const { return scale_; }

  void Advance(EventScheduler& scheduler, absl::Duration d);

 private:
  SimClock(ClockMode mode, double scale) : mode_(mode), scale_(scale) {}

  ClockMode mode_;
  double scale_;
  // Wall/virtual anchor pair for realtime pacing.
  bool anchored_ = false;
  std::chrono::steady_clock::time_point wall_origin_;
  SimTime virtual_origin_;
};

}  // namespace abpipe::traffic

#endif  // ABPIPE_TRAFFIC_SCHEDULER_H_
