// mwer/scorer.h
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

#ifndef MWER_SCORER_H_
#define MWER_SCORER_H_

#include <vector>

namespace mwer {

// Incremental view of a transducer bound to one utterance: encoder states
// are fixed per frame, the predictor state advances one emitted label at a
// time, and Logits() evaluates the joint at (frame, state). Implementations
// must be pure so decode workers can share one scorer across threads.
class TransducerScorer {
 public:
  using State = std::vector<double>;  // predictor hidden state

  virtual ~TransducerScorer() = default;

  virtual int vocab_size() const = 0;
  virtual int blank_id() const = 0;
  virtual int eos_id() const = 0;  // -1 when no EOS token is configured
  virtual int num_frames() const = 0;

  virtual State StartState() const = 0;
  virtual State Advance(const State &state, int token) const = 0;
  virtual std::vector<double> Logits(int frame, const State &state) const = 0;
};

}  // namespace mwer

#endif  // MWER_SCORER_H_
