// mwer/rescore.h
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
//
// Second-pass re-ranking. Transducer rescoring replaces beam-merged
// hypothesis scores with exact all-alignment scores; language-model
// rescoring combines the acoustic score with a length-normalized LM score,
//   combined = log P(y|x) + lm_weight * log P_LM(y) / |y|.

#ifndef MWER_RESCORE_H_
#define MWER_RESCORE_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mwer/nbest.h"
#include "mwer/scorer.h"
#include "mwer/vocab.h"

namespace mwer {

// Add-delta smoothed count n-gram model over token names. The closed
// prediction vocabulary is every trained token plus the sentence-end and
// unknown symbols, so each conditional distribution sums to one exactly.
class NGramLM {
 public:
  NGramLM(int order, double delta);

  void Train(const std::vector<std::vector<std::string>> &corpus);

  // Sum of conditional log-probs including sentence end; always <= 0.
  // Out-of-vocabulary tokens are mapped to the unknown symbol.
  double Score(std::span<const std::string> tokens) const;

  // log P(token | context); context is the raw history, longest-suffix
  // truncated to order-1 and padded with sentence-start.
  double CondLogProb(std::span<const std::string> context,
                     const std::string &token) const;

  int order() const { return order_; }
  double delta() const { return delta_; }
  // Trained tokens plus kSentenceEnd and kUnknown.
  std::vector<std::string> ClosedVocab() const;

  void Save(const std::string &path) const;
  static NGramLM Load(const std::string &path);

  // Raw count table access for independent verification.
  const std::map<std::string, std::map<std::string, int64_t>> &counts() const {
    return counts_;
  }

  static constexpr const char *kSentenceStart = "<s>";
  static constexpr const char *kSentenceEnd = "</s>";
  static constexpr const char *kUnknown = "<unk>";

 private:
  std::string ContextKey(std::span<const std::string> context) const;
  std::string MapToken(const std::string &token) const;

  int order_;
  double delta_;
  std::map<std::string, int64_t> vocab_;  // trained tokens with counts
  std::map<std::string, std::map<std::string, int64_t>> counts_;
  std::map<std::string, int64_t> context_totals_;
};

struct RescoreConfig {
  double lm_weight = 0.3;        // lambda
  bool length_normalize = true;  // divide the LM term by |y|
};

// Replaces each hypothesis score with its exact all-alignment score and
// re-sorts. Token sequences are untouched; applying it twice is a fixed
// point.
NBestList RnntRescore(NBestList nbest, const TransducerScorer &scorer,
                      double temperature = 1.0);

// Combined-score re-ranking. |y| counts tokens after EOS stripping, with
// empty hypotheses scored as length 1. lm_weight = 0 is the identity on
// ordering and scores.
NBestList LmRescore(NBestList nbest, const NGramLM &lm,
                    const RescoreConfig &config, const Vocab &vocab);

}  // namespace mwer

#endif  // MWER_RESCORE_H_
