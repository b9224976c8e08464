// mwer/decoder.h
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
// Frame-synchronous beam search over a transducer. Beam candidates whose
// blank-free token sequences coincide are merged by log-sum-exp; the
// prefix-summation step of the classic algorithm is deliberately absent,
// so a hypothesis's merged score is the mass of the alignments the beam
// retained — a lower bound on its exact lattice score.

#ifndef MWER_DECODER_H_
#define MWER_DECODER_H_

#include <span>

#include "mwer/nbest.h"
#include "mwer/scorer.h"

namespace mwer {

struct DecodeConfig {
  int beam_size = 4;
  double temperature = 1.0;  // 1.2 is the best published decode setting
  int max_symbols_per_frame = 10;
  // When set, emitting the scorer's EOS token finalizes a hypothesis at its
  // current partial score (endpointer behavior); EOS stays in the token
  // sequence and is stripped only for error counting.
  bool include_eos = false;
};

// Up to beam_size distinct blank-free hypotheses, merged scores, sorted by
// score descending with lexicographic tie-breaking. utterance_id and
// reference of the result are left empty for the caller.
NBestList BeamSearch(const TransducerScorer &scorer,
                     const DecodeConfig &config);

// Scores every blank-free sequence up to max_len exactly (all alignments,
// via the forward DP) and returns the true top-N. Test oracle; refuses
// vocabularies/lengths whose enumeration exceeds 1e6 sequences.
NBestList ExhaustiveDecode(const TransducerScorer &scorer, int max_len,
                           double temperature, int top_n);

// Exact sequence log-prob through the scorer interface (builds the
// posterior lattice for one candidate sequence and runs the forward DP).
double ExactScore(const TransducerScorer &scorer, std::span<const int> tokens,
                  double temperature);

}  // namespace mwer

#endif  // MWER_DECODER_H_
