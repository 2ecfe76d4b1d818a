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

#ifndef ABPIPE_COMMON_STATUS_MACROS_H_
#define ABPIPE_COMMON_STATUS_MACROS_H_

#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define ABPIPE_STATUS_CONCAT_INNER(a, b) a##b
#define ABPIPE_STATUS_CONCAT(a, b) ABPIPE_STATUS_CONCAT_INNER(a, b)

#define ABPIPE_RETURN_IF_ERROR(expr)   \
  do {                                 \
    absl::Status _abpipe_status = (expr); \
    if (!_abpipe_status.ok()) return _abpipe_status; \
  } while (false)

#define ABPIPE_ASSIGN_OR_RETURN_IMPL(statusor, lhs, expr) \
  auto statusor = (expr);                                 \
  if (!statusor.ok()) return statusor.status();           \
  lhs = std::move(*statusor)

#define ABPIPE_ASSIGN_OR_RETURN(lhs, expr) \
  ABPIPE_ASSIGN_OR_RETURN_IMPL(            \
      ABPIPE_STATUS_CONCAT(_abpipe_statusor_, __LINE__), lhs, expr)

#endif  // ABPIPE_COMMON_STATUS_MACROS_H_
