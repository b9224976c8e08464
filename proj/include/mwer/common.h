// mwer/common.h
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MWER_COMMON_H_
#define MWER_COMMON_H_

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace mwer {

// Malformed or inconsistent input data: bad files, schema violations,
// id mismatches. Maps to process exit code 2 in the CLI.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

// A numeric invariant failed at runtime (non-finite loss, normalization
// drift, divergence). Maps to process exit code 3 in the CLI.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string &msg) : std::runtime_error(msg) {}
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow; -inf operands behave as prob 0.
inline double LogSumExp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;  // covers both -inf
  return a + std::log1p(std::exp(b - a));
}

inline bool AllFinite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace mwer

#endif  // MWER_COMMON_H_
