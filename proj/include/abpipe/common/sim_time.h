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

#ifndef ABPIPE_COMMON_SIM_TIME_H_
#define ABPIPE_COMMON_SIM_TIME_H_

#include <compare>
#include <cstdint>

#include "absl/time/time.h"

namespace abpipe {

// An instant on the simulation clock, in integer nanoseconds since the
// simulation origin.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime FromNanos(int64_t nanos) { return SimTime(nanos); }
  static SimTime FromSeconds(double seconds) {
    return SimTime(static_cast<int64_t>(seconds * 1e9 + 0.5));
  }

  constexpr int64_t nanos() const { return nanos_; }
  double seconds() const { return static_cast<double>(nanos_) * 1e-9; }

  SimTime operator+(absl::Duration d) const {
    return SimTime(nanos_ + absl::ToInt64Nanoseconds(d));
  }
  absl::Duration operator-(SimTime other) const {
    return absl::Nanoseconds(nanos_ - other.nanos_);
  }

  constexpr auto operator<=>(const SimTime&) const = default;

 private:
  constexpr explicit SimTime(int64_t nanos) : nanos_(nanos) {}

  int64_t nanos_ = 0;
};

}  // namespace abpipe

#endif  // ABPIPE_COMMON_SIM_TIME_H_
