// mwer/mwer_loss.h
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
// Expected word errors over an N-best list and its gradient chain:
//
//   loss = sum_i softmax(log P(y_i|x))_i * R(y_i, y_ref)
//
// The score gradient is p_i * (R_i - expected_R); the lattice gradient
// chains that scalar through d log P(y_i|x) / d logits of the hypothesis's
// own alignment lattice. Hypothesis scores are always recomputed exactly
// (all alignments) before the loss is formed; incoming beam scores only
// determine the hypothesis set.

#ifndef MWER_MWER_LOSS_H_
#define MWER_MWER_LOSS_H_

#include <functional>
#include <span>
#include <vector>

#include "mwer/lattice.h"
#include "mwer/nbest.h"

namespace mwer {

// Softmax over hypothesis log-scores (Bayes-normalized N-best posterior).
// Invariant under adding a constant; throws on non-finite input.
std::vector<double> NormalizeScores(std::span<const double> log_scores);

struct MwerOptions {
  // Temperature for the exact score recomputation. Training-side default
  // stays at 1.0; decode-time temperature is a separate concern.
  double temperature = 1.0;
  // When >= 0, this token is stripped from hypothesis and reference before
  // counting word errors (end-of-sentence marker).
  int strip_token = -1;
  // Force-add the reference as an extra hypothesis when the list misses it.
  bool add_reference = false;
};

// Per-hypothesis word-error counts R(y_i, y_ref), honoring strip_token.
std::vector<int> HypothesisErrors(const NBestList &nbest,
                                  int strip_token = -1);

struct MwerLossResult {
  double loss = 0.0;             // equals expected_errors by definition
  double expected_errors = 0.0;  // R-hat
};

// Expected errors under the normalized score distribution, from the scores
// already present in the list. Bounded by [min R_i, max R_i].
MwerLossResult MwerLoss(const NBestList &nbest, int strip_token = -1);

// d loss / d log P(y_i|x) = p_i * (R_i - R_hat). Sums to zero.
std::vector<double> MwerScoreGrads(const NBestList &nbest,
                                   int strip_token = -1);

// Produces the hypothesis-specific logit lattice for a token sequence
// (model forward pass bound to one utterance's features).
using LatticeEvalFn = std::function<LogitLattice(std::span<const int>)>;

struct MwerGradients {
  // Hypotheses actually used (after dedupe / non-finite drops), carrying
  // their exact recomputed log-scores.
  std::vector<Hypothesis> hypotheses;
  std::vector<double> score_grads;          // d loss / d log P(y_i|x)
  std::vector<Tensor3> lattice_grads;       // d loss / d logits, per hypothesis
  double loss = 0.0;
  double expected_errors = 0.0;
  int dropped = 0;  // hypotheses discarded for non-finite exact scores
};

// The full chain: exact rescoring of every hypothesis, expected-error loss
// over the exact scores, and per-hypothesis gradients w.r.t. the raw
// logits of each hypothesis lattice. Throws NumericError when no
// hypothesis has a finite exact score.
MwerGradients MwerFullGrad(const LatticeEvalFn &lattice_for,
                           const NBestList &nbest,
                           const MwerOptions &options = {});

}  // namespace mwer

#endif  // MWER_MWER_LOSS_H_
