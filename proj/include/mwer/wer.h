// mwer/wer.h
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

#ifndef MWER_WER_H_
#define MWER_WER_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "mwer/dataset.h"
#include "mwer/nbest.h"

namespace mwer {

// Corpus-level word error rate from top-1 hypotheses: total edit distance
// over total reference length, with the error breakdown summed per
// utterance. normalized_wer is wer / baseline when a baseline is supplied.
struct WerReport {
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t ref_tokens = 0;
  int64_t num_utterances = 0;
  std::optional<double> normalized_wer;

  int64_t total_errors() const {
    return substitutions + insertions + deletions;
  }
  double wer() const {
    return ref_tokens == 0 ? 0.0
                           : static_cast<double>(total_errors()) /
                                 static_cast<double>(ref_tokens);
  }
};

// Hypothesis ids and reference ids must match one-to-one; mismatches are a
// hard error listing the offending ids. strip_token (usually EOS) is
// removed from both sides before scoring; -1 strips nothing.
WerReport ComputeWer(std::span<const NBestList> hyps, const Dataset &refs,
                     int strip_token = -1,
                     std::optional<double> baseline_wer = std::nullopt);

void PrintWerReport(std::ostream &os, const WerReport &report);
nlohmann::json WerReportToJson(const WerReport &report);

}  // namespace mwer

#endif  // MWER_WER_H_
