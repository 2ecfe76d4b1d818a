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

#include "abpipe/common/request.h"

#include "absl/status/status.h"
#include <fmt/format.h>

namespace abpipe {

std::string_view VariantName(Variant v) { return v == Variant::kA ? "A" : "B"; }

absl::StatusOr<Variant> ParseVariant(std::string_view name) {
  if (name == "A" || name == "a") return Variant::kA;
  if (name == "B" || name == "b") return Variant::kB;
  return absl::InvalidArgumentError(fmt::format("unknown variant: {}", name));
}

}  // namespace abpipe
