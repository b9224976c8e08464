// mwer/nbest.h
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

#ifndef MWER_NBEST_H_
#define MWER_NBEST_H_

#include <string>
#include <vector>

namespace mwer {

// Where a hypothesis score came from: the beam search merge (a subset of
// alignments) or an exact all-alignments lattice evaluation.
enum class ScoreSource { kBeam, kExact };

struct Hypothesis {
  std::vector<int> tokens;  // blank-free
  double log_score = 0.0;
  ScoreSource source = ScoreSource::kBeam;
};

// Decoded hypotheses for one utterance, ordered by non-increasing
// log_score with pairwise-distinct token sequences.
struct NBestList {
  std::string utterance_id;
  std::vector<Hypothesis> hypotheses;
  std::vector<int> reference;
};

// Canonical order: score descending, ties by lexicographic token sequence.
void SortHypotheses(std::vector<Hypothesis> *hypotheses);

// Throws std::invalid_argument if the list is empty, unordered, or contains
// duplicate token sequences.
void ValidateNBest(const NBestList &nbest);

// Collapses duplicate token sequences (keeps the higher-scored entry) and
// restores canonical order. Used when ingesting externally produced lists.
NBestList DedupeNBest(NBestList nbest);

}  // namespace mwer

#endif  // MWER_NBEST_H_
