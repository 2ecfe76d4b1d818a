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

#include "abpipe/traffic/scheduler.h"

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>

namespace abpipe::traffic {

void EventScheduler::Schedule(SimTime at, Callback callback, uint64_t owner) {
  queue_.push_back(Event{std::max(at, now_), next_seq_++, owner, std::move(callback)});
  std::push_heap(queue_.begin(), queue_.end(), Later{});
}

int64_t EventScheduler::AdvanceTo(SimTime until) {
  int64_t fired = 0;
  while (!queue_.empty() && queue_.front().at <= until) {
    std::pop_heap(queue_.begin(), queue_.end(), Later{});
    Event event = std::move(queue_.back());
    queue_.pop_back();
    now_ = event.at;
    event.callback(event.at);
    ++fired;
  }
  if (until > now_) now_ = until;
  return fired;
}

void EventScheduler::CancelOwner(uint64_t owner) {
  std::erase_if(queue_, [owner](const Event& e) { return e.owner == owner; });
  std::make_heap(queue_.begin(), queue_.end(), Later{});
}

absl::StatusOr<SimClock> SimClock::Create(ClockMode mode, double scale) {
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError("time scale must be a positive number");
  }
  return SimClock(mode, scale);
}

void SimClock::Advance(EventScheduler& scheduler, absl::Duration d) {
  if (mode_ == ClockMode::kVirtual) {
    scheduler.AdvanceBy(d);
    return;
  }
  if (!anchored_) {
    anchored_ = true;
    wall_origin_ = std::chrono::steady_clock::now();
    virtual_origin_ = scheduler.now();
  }
  const SimTime target = scheduler.now() + d;
  constexpr absl::Duration kSlice = absl::Milliseconds(10);
  while (scheduler.now() < target) {
    const SimTime next = std::min(scheduler.now() + kSlice, target);
    const double virtual_elapsed = (next - virtual_origin_) / absl::Seconds(1);
    std::this_thread::sleep_until(
        wall_origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           std::chrono::duration<double>(virtual_elapsed / scale_)));
    scheduler.AdvanceTo(next);
  }
}

}  // namespace abpipe::traffic
