// mwer/decoder.cc
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

#include "mwer/decoder.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "mwer/common.h"
#include "mwer/lattice.h"

namespace mwer {

namespace {

struct Candidate {
  double log_score = kNegInf;
  TransducerScorer::State state;
};

using CandidateMap = std::map<std::vector<int>, Candidate>;

// Log-softmax of logits / temperature.
std::vector<double> LogPosteriors(std::vector<double> logits,
                                  double temperature) {
  double max = kNegInf;
  for (double &v : logits) {
    v /= temperature;
    max = std::max(max, v);
  }
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - max);
  const double lse = max + std::log(sum);
  for (double &v : logits) v -= lse;
  return logits;
}

// Merge one path's mass into the candidate sharing its token sequence.
// Identical sequences at the same frame carry identical predictor states,
// so the state of the first arrival is kept.
void MergeInto(CandidateMap *map, const std::vector<int> &tokens,
               double log_score, TransducerScorer::State state) {
  auto [it, inserted] = map->try_emplace(tokens);
  if (inserted) {
    it->second.log_score = log_score;
    it->second.state = std::move(state);
  } else {
    it->second.log_score = LogSumExp(it->second.log_score, log_score);
  }
}

// Keep the beam_size best (score descending, token sequence ascending on
// ties). std::map iteration already yields ascending token order, and
// stable_sort preserves it within equal scores.
void Prune(CandidateMap *map, int beam_size) {
  if (static_cast<int>(map->size()) <= beam_size) return;
  std::vector<std::pair<double, const std::vector<int> *>> order;
  order.reserve(map->size());
  for (const auto &[tokens, cand] : *map) {
    order.emplace_back(cand.log_score, &tokens);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto &a, const auto &b) {
                     return a.first > b.first;
                   });
  CandidateMap kept;
  for (int i = 0; i < beam_size; ++i) {
    kept.insert(map->extract(*order[i].second));
  }
  *map = std::move(kept);
}

}  // namespace

NBestList BeamSearch(const TransducerScorer &scorer,
                     const DecodeConfig &config) {
  if (config.beam_size < 1 || config.max_symbols_per_frame < 1) {
    throw std::invalid_argument("beam_size and max_symbols_per_frame must be "
                                "positive");
  }
  if (!(config.temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  const int T = scorer.num_frames();
  if (T < 1) throw std::invalid_argument("cannot decode an empty utterance");
  const int K = scorer.vocab_size();
  const int blank = scorer.blank_id();
  const int eos = config.include_eos ? scorer.eos_id() : -1;

  CandidateMap frontier;  // candidates about to consume the next frame
  frontier[{}] = Candidate{0.0, scorer.StartState()};
  CandidateMap finished;  // EOS-finalized hypotheses (endpointed)

  for (int t = 0; t < T; ++t) {
    CandidateMap expanding = std::move(frontier);
    frontier.clear();
    for (int round = 0; round <= config.max_symbols_per_frame; ++round) {
      CandidateMap next;
      for (const auto &[tokens, cand] : expanding) {
        const std::vector<double> lp =
            LogPosteriors(scorer.Logits(t, cand.state), config.temperature);
        // Blank consumes the frame; after the last frame this is the
        // terminal transition and the hypothesis is complete.
        const double blank_score = cand.log_score + lp[blank];
        if (std::isfinite(blank_score)) {
          MergeInto(&frontier, tokens, blank_score, cand.state);
        }
        if (round == config.max_symbols_per_frame) continue;
        for (int k = 0; k < K; ++k) {
          if (k == blank) continue;
          const double score = cand.log_score + lp[k];
          if (!std::isfinite(score)) continue;
          std::vector<int> extended = tokens;
          extended.push_back(k);
          if (k == eos) {
            MergeInto(&finished, extended, score, cand.state);
          } else {
            MergeInto(&next, extended, score, scorer.Advance(cand.state, k));
          }
        }
      }
      if (next.empty()) break;
      Prune(&next, config.beam_size);
      expanding = std::move(next);
    }
    Prune(&frontier, config.beam_size);
    if (frontier.empty() && finished.empty()) {
      throw NumericError("beam search pruned every path to zero probability");
    }
  }

  for (const auto &[tokens, cand] : frontier) {
    MergeInto(&finished, tokens, cand.log_score, cand.state);
  }
  if (finished.empty()) {
    throw NumericError("beam search produced no finished hypothesis");
  }

  NBestList out;
  for (const auto &[tokens, cand] : finished) {
    out.hypotheses.push_back(
        Hypothesis{tokens, cand.log_score, ScoreSource::kBeam});
  }
  SortHypotheses(&out.hypotheses);
  if (static_cast<int>(out.hypotheses.size()) > config.beam_size) {
    out.hypotheses.resize(config.beam_size);
  }
  return out;
}

double ExactScore(const TransducerScorer &scorer, std::span<const int> tokens,
                  double temperature) {
  const int T = scorer.num_frames();
  const int U = static_cast<int>(tokens.size());
  const int K = scorer.vocab_size();

  Tensor3 logits(T, U + 1, K);
  TransducerScorer::State state = scorer.StartState();
  for (int u = 0; u <= U; ++u) {
    for (int t = 0; t < T; ++t) {
      std::vector<double> z = scorer.Logits(t, state);
      std::copy(z.begin(), z.end(), logits.Row(t, u).begin());
    }
    if (u < U) state = scorer.Advance(state, tokens[u]);
  }
  LogPosteriorLattice post = Normalize(
      LogitLattice(std::move(logits), scorer.blank_id()), temperature);
  return SequenceLogProb(post, tokens);
}

NBestList ExhaustiveDecode(const TransducerScorer &scorer, int max_len,
                           double temperature, int top_n) {
  if (max_len < 0 || top_n < 1) {
    throw std::invalid_argument("max_len must be >= 0 and top_n >= 1");
  }
  const int K = scorer.vocab_size();
  const int real_tokens = K - 1;  // everything but blank
  double count = 0.0;
  double layer = 1.0;
  for (int len = 0; len <= max_len; ++len) {
    count += layer;
    layer *= real_tokens;
  }
  if (count > 1e6) {
    throw std::invalid_argument(
        "exhaustive decode would enumerate more than 1e6 sequences");
  }

  std::vector<Hypothesis> scored;
  std::vector<int> tokens;
  auto recurse = [&](auto &&self) -> void {
    scored.push_back(Hypothesis{tokens,
                                ExactScore(scorer, tokens, temperature),
                                ScoreSource::kExact});
    if (static_cast<int>(tokens.size()) == max_len) return;
    for (int k = 0; k < K; ++k) {
      if (k == scorer.blank_id()) continue;
      tokens.push_back(k);
      self(self);
      tokens.pop_back();
    }
  };
  recurse(recurse);

  SortHypotheses(&scored);
  if (static_cast<int>(scored.size()) > top_n) scored.resize(top_n);
  NBestList out;
  out.hypotheses = std::move(scored);
  return out;
}

}  // namespace mwer
