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

#include "abpipe/stats/distributions.h"

#include <cmath>
#include <limits>
#include <numbers>

namespace abpipe::stats {
namespace {

constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 200000;

// Tail of Stirling's series for lgamma(z), z >= 30.
double StirlingCorrection(double z) {
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  return inv * (1.0 / 12 - inv2 * (1.0 / 360 - inv2 * (1.0 / 1260 - inv2 / 1680)));
}

// lgamma(a + b) - lgamma(a) without the cancellation of subtracting two large
// lgamma values.
double LogGammaRatio(double a, double b) {
  if (a < 30.0 || a + b < 30.0) return std::lgamma(a + b) - std::lgamma(a);
  return (a - 0.5) * std::log1p(b / a) + b * std::log(a + b) - b +
         StirlingCorrection(a + b) - StirlingCorrection(a);
}

// log B(a, b).
double LogBeta(double a, double b) {
  if (a < b) std::swap(a, b);  // a is the larger argument
  return std::lgamma(b) - LogGammaRatio(a, b);
}

// Continued fraction for I_x(a, b) (modified Lentz), valid for
// x < (a + 1) / (a + b + 2).
double BetaContinuedFraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) break;
  }
  return h;
}

}  // namespace

double RegularizedIncompleteBeta(double a, double b, double x, double complement) {
  if (std::isnan(x) || a <= 0.0 || b <= 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (x <= 0.0) return 0.0;
  if (complement <= 0.0) return 1.0;
  const double log_front =
      a * std::log(x) + b * std::log(complement) - LogBeta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * BetaContinuedFraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * BetaContinuedFraction(b, a, complement) / b;
}

double RegularizedIncompleteBeta(double a, double b, double x) {
  return RegularizedIncompleteBeta(a, b, x, 1.0 - x);
}

double StudentTTwoSidedPValue(double t, double df) {
  if (std::isnan(t) || std::isnan(df) || df <= 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  const double denom = df + t2;
  return RegularizedIncompleteBeta(df / 2.0, 0.5, df / denom, t2 / denom);
}

double NormalTwoSidedPValue(double z) {
  return std::erfc(std::fabs(z) / std::numbers::sqrt2);
}

}  // namespace abpipe::stats
