// mwer/lattice.h
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

#ifndef MWER_LATTICE_H_
#define MWER_LATTICE_H_

#include <span>
#include <vector>

#include "mwer/tensor.h"

namespace mwer {

// Raw joint-network outputs over the (frame, label-position) grid:
// values(t, u, k) is the logit for emitting vocabulary entry k at frame t
// after u labels. Shape (T, U+1, K); K includes the blank.
//
// All lattice math runs in 64-bit log space. Construction rejects
// non-finite entries so every -inf seen downstream is a genuine log(0)
// produced by normalization, never garbage input.
class LogitLattice {
 public:
  LogitLattice(Tensor3 values, int blank_id);

  int num_frames() const { return values_.dim0(); }       // T
  int num_labels() const { return values_.dim1() - 1; }   // U
  int vocab_size() const { return values_.dim2(); }       // K
  int blank_id() const { return blank_id_; }

  double operator()(int t, int u, int k) const { return values_(t, u, k); }
  const Tensor3 &values() const { return values_; }
  Tensor3 &mutable_values() { return values_; }

 private:
  Tensor3 values_;
  int blank_id_;
};

// log P(k | t, u) after temperature softmax; rows log-sum-exp to 0.
class LogPosteriorLattice {
 public:
  LogPosteriorLattice(Tensor3 log_probs, int blank_id, double temperature);

  int num_frames() const { return log_probs_.dim0(); }
  int num_labels() const { return log_probs_.dim1() - 1; }
  int vocab_size() const { return log_probs_.dim2(); }
  int blank_id() const { return blank_id_; }
  double temperature() const { return temperature_; }

  double operator()(int t, int u, int k) const { return log_probs_(t, u, k); }
  const Tensor3 &log_probs() const { return log_probs_; }

 private:
  Tensor3 log_probs_;
  int blank_id_;
  double temperature_;
};

// Forward/backward log DP matrices, both (T, U+1).
// alpha(0,0) = 0 and beta(T-1,U) = log P(blank | T-1, U).
struct AlphaBeta {
  Matrix alpha;
  Matrix beta;
};

// One monotone path through the grid: kBlankMove advances t, a value
// u in [0,U) emits label position u (the labels appear in order). Every
// path has exactly T blanks and ends with the terminal blank.
inline constexpr int kBlankMove = -1;

struct AlignmentPath {
  std::vector<int> moves;  // length T + U
};

// Temperature softmax in log space: log_probs = log_softmax(values / t).
// Throws std::invalid_argument for t <= 0.
LogPosteriorLattice Normalize(const LogitLattice &lattice, double temperature);

// Grid DP per the standard transducer recursions:
//   alpha(t,u) = lse(alpha(t-1,u) + lp(blank|t-1,u),
//                    alpha(t,u-1) + lp(y_u|t,u-1))
// and the mirror-image beta from (T-1, U). labels must be blank-free and
// of length U.
AlphaBeta ForwardBackward(const LogPosteriorLattice &post,
                          std::span<const int> labels);

// log P(y|x) = alpha(T-1,U) + log P(blank|T-1,U); forward pass only.
double SequenceLogProb(const LogPosteriorLattice &post,
                       std::span<const int> labels);

// log P(y|x) plus its gradient w.r.t. the raw logits (the occupancy form
// of the lattice derivative composed with the temperature-softmax
// Jacobian). Shared backbone for both the transducer loss and the
// expected-error loss chain.
struct SequenceLogProbGradResult {
  double log_prob;
  Tensor3 logit_grad;  // d log P(y|x) / d logits, shape (T, U+1, K)
};
SequenceLogProbGradResult SequenceLogProbWithGrad(const LogitLattice &lattice,
                                                  std::span<const int> labels,
                                                  double temperature);

// loss = -log P(y|x); grad = d loss / d logits. Throws NumericError when a
// required transition has probability zero (loss would be +inf).
struct RnntLossResult {
  double loss;
  Tensor3 logit_grad;
};
RnntLossResult RnntLossAndGrad(const LogitLattice &lattice,
                               std::span<const int> labels,
                               double temperature);

// All C(T-1+U, U) monotone alignments for a (T, U) grid, enumerated in
// lexicographic move order. Test oracle; refuses T + U > 24.
std::vector<AlignmentPath> EnumerateAlignments(int num_frames, int num_labels);

// Structural validity of a path against a (T, U) grid.
bool IsValidAlignment(const AlignmentPath &path, int num_frames,
                      int num_labels);

}  // namespace mwer

#endif  // MWER_LATTICE_H_
