// mwer/edit_distance.h
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

#ifndef MWER_EDIT_DISTANCE_H_
#define MWER_EDIT_DISTANCE_H_

#include <span>

namespace mwer {

// Error breakdown of one hypothesis against its reference; total() is the
// Levenshtein distance under unit costs.
struct ErrorCount {
  int substitutions = 0;
  int insertions = 0;  // hypothesis tokens with no reference counterpart
  int deletions = 0;   // reference tokens missing from the hypothesis
  int total() const { return substitutions + insertions + deletions; }
};

// Unit-cost Levenshtein distance with a deterministic backtrace; ties are
// resolved preferring substitution, then insertion, then deletion.
ErrorCount EditDistance(std::span<const int> hyp, std::span<const int> ref);

}  // namespace mwer

#endif  // MWER_EDIT_DISTANCE_H_
