// mwer/mwer_loss.cc
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

#include "mwer/mwer_loss.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "mwer/common.h"
#include "mwer/edit_distance.h"

namespace mwer {

namespace {

std::vector<int> Stripped(std::span<const int> tokens, int strip_token) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (int t : tokens) {
    if (t != strip_token) out.push_back(t);
  }
  return out;
}

}  // namespace

void SortHypotheses(std::vector<Hypothesis> *hypotheses) {
  std::stable_sort(hypotheses->begin(), hypotheses->end(),
                   [](const Hypothesis &a, const Hypothesis &b) {
                     if (a.log_score != b.log_score) {
                       return a.log_score > b.log_score;
                     }
                     return a.tokens < b.tokens;
                   });
}

void ValidateNBest(const NBestList &nbest) {
  if (nbest.hypotheses.empty()) {
    throw std::invalid_argument("N-best list for utterance '" +
                                nbest.utterance_id + "' is empty");
  }
  for (size_t i = 1; i < nbest.hypotheses.size(); ++i) {
    if (nbest.hypotheses[i - 1].log_score < nbest.hypotheses[i].log_score) {
      throw std::invalid_argument("N-best list for utterance '" +
                                  nbest.utterance_id +
                                  "' is not sorted by log score");
    }
  }
  std::map<std::vector<int>, int> seen;
  for (const Hypothesis &hyp : nbest.hypotheses) {
    if (++seen[hyp.tokens] > 1) {
      throw std::invalid_argument("N-best list for utterance '" +
                                  nbest.utterance_id +
                                  "' contains duplicate token sequences");
    }
  }
}

NBestList DedupeNBest(NBestList nbest) {
  std::map<std::vector<int>, Hypothesis> best;
  for (Hypothesis &hyp : nbest.hypotheses) {
    auto it = best.find(hyp.tokens);
    if (it == best.end() || hyp.log_score > it->second.log_score) {
      best[hyp.tokens] = std::move(hyp);
    }
  }
  nbest.hypotheses.clear();
  for (auto &[tokens, hyp] : best) nbest.hypotheses.push_back(std::move(hyp));
  SortHypotheses(&nbest.hypotheses);
  return nbest;
}

std::vector<double> NormalizeScores(std::span<const double> log_scores) {
  if (log_scores.empty()) {
    throw std::invalid_argument("cannot normalize an empty score list");
  }
  if (!AllFinite(log_scores)) {
    throw std::invalid_argument("non-finite hypothesis log score");
  }
  const double max = *std::max_element(log_scores.begin(), log_scores.end());
  std::vector<double> probs(log_scores.size());
  double sum = 0.0;
  for (size_t i = 0; i < log_scores.size(); ++i) {
    probs[i] = std::exp(log_scores[i] - max);
    sum += probs[i];
  }
  for (double &p : probs) p /= sum;
  return probs;
}

std::vector<int> HypothesisErrors(const NBestList &nbest, int strip_token) {
  const std::vector<int> ref = Stripped(nbest.reference, strip_token);
  std::vector<int> errors;
  errors.reserve(nbest.hypotheses.size());
  for (const Hypothesis &hyp : nbest.hypotheses) {
    errors.push_back(
        EditDistance(Stripped(hyp.tokens, strip_token), ref).total());
  }
  return errors;
}

MwerLossResult MwerLoss(const NBestList &nbest, int strip_token) {
  ValidateNBest(nbest);
  std::vector<double> scores;
  scores.reserve(nbest.hypotheses.size());
  for (const Hypothesis &hyp : nbest.hypotheses) {
    scores.push_back(hyp.log_score);
  }
  const std::vector<double> probs = NormalizeScores(scores);
  const std::vector<int> errors = HypothesisErrors(nbest, strip_token);
  double expected = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) expected += probs[i] * errors[i];
  return MwerLossResult{expected, expected};
}

std::vector<double> MwerScoreGrads(const NBestList &nbest, int strip_token) {
  ValidateNBest(nbest);
  std::vector<double> scores;
  scores.reserve(nbest.hypotheses.size());
  for (const Hypothesis &hyp : nbest.hypotheses) {
    scores.push_back(hyp.log_score);
  }
  const std::vector<double> probs = NormalizeScores(scores);
  const std::vector<int> errors = HypothesisErrors(nbest, strip_token);
  double expected = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) expected += probs[i] * errors[i];
  std::vector<double> grads(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) {
    grads[i] = probs[i] * (errors[i] - expected);
  }
  return grads;
}

MwerGradients MwerFullGrad(const LatticeEvalFn &lattice_for,
                           const NBestList &nbest,
                           const MwerOptions &options) {
  if (nbest.hypotheses.empty()) {
    throw std::invalid_argument("N-best list for utterance '" +
                                nbest.utterance_id + "' is empty");
  }

  // The decoder supplies the hypothesis set only; duplicates would
  // double-count probability mass in the normalized distribution.
  NBestList working = DedupeNBest(nbest);
  if (options.add_reference) {
    const bool present = std::any_of(
        working.hypotheses.begin(), working.hypotheses.end(),
        [&](const Hypothesis &h) { return h.tokens == working.reference; });
    if (!present) {
      working.hypotheses.push_back(
          Hypothesis{working.reference, kNegInf, ScoreSource::kExact});
    }
  }

  MwerGradients out;
  std::vector<Tensor3> dlogp;  // d log P(y_i|x) / d logits per kept hypothesis
  for (Hypothesis &hyp : working.hypotheses) {
    SequenceLogProbGradResult r = SequenceLogProbWithGrad(
        lattice_for(hyp.tokens), hyp.tokens, options.temperature);
    if (!std::isfinite(r.log_prob)) {
      ++out.dropped;
      continue;
    }
    hyp.log_score = r.log_prob;
    hyp.source = ScoreSource::kExact;
    out.hypotheses.push_back(hyp);
    dlogp.push_back(std::move(r.logit_grad));
  }
  if (out.hypotheses.empty()) {
    throw NumericError("utterance '" + nbest.utterance_id +
                       "': no hypothesis has a finite exact score");
  }

  std::vector<double> scores;
  scores.reserve(out.hypotheses.size());
  std::vector<int> ref = Stripped(working.reference, options.strip_token);
  std::vector<int> errors;
  for (const Hypothesis &hyp : out.hypotheses) {
    scores.push_back(hyp.log_score);
    errors.push_back(
        EditDistance(Stripped(hyp.tokens, options.strip_token), ref).total());
  }
  const std::vector<double> probs = NormalizeScores(scores);
  double expected = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) expected += probs[i] * errors[i];

  out.loss = expected;
  out.expected_errors = expected;
  out.score_grads.resize(probs.size());
  out.lattice_grads.reserve(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) {
    out.score_grads[i] = probs[i] * (errors[i] - expected);
    Tensor3 grad = std::move(dlogp[i]);
    for (double &g : grad.data()) g *= out.score_grads[i];
    out.lattice_grads.push_back(std::move(grad));
  }
  return out;
}

}  // namespace mwer
