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

#ifndef ABPIPE_STATS_DISTRIBUTIONS_H_
#define ABPIPE_STATS_DISTRIBUTIONS_H_

namespace abpipe::stats {

// I_x(a, b). `complement` must equal 1 - x, computed by the caller.
double RegularizedIncompleteBeta(double a, double b, double x, double complement);
double RegularizedIncompleteBeta(double a, double b, double x);

// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double StudentTTwoSidedPValue(double t, double df);

// P(|Z| >= |z|) for a standard normal.
double NormalTwoSidedPValue(double z);

}  // namespace abpipe::stats

#endif  // ABPIPE_STATS_DISTRIBUTIONS_H_
