// mwer/model.h
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
// Minimal trainable transducer: a single tanh recurrent layer on each side,
// an additive joint projected to a shared dimension, and an output
// projection to K logits. Forward evaluation produces a LogitLattice;
// BackwardLattice runs reverse-mode accumulation from lattice logit
// gradients down to every parameter tensor.

#ifndef MWER_MODEL_H_
#define MWER_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mwer/lattice.h"
#include "mwer/scorer.h"
#include "mwer/tensor.h"

namespace mwer {

struct ModelDims {
  int feat_dim = 8;
  int vocab_size = 0;  // K, includes blank (and EOS when configured)
  int blank_id = 0;
  int eos_id = -1;  // -1 when absent
  int enc_hidden = 16;
  int embed_dim = 8;
  int pred_hidden = 16;
  int joint_dim = 16;
};

bool operator==(const ModelDims &a, const ModelDims &b);

// All trainable tensors. Biases are stored as (1, n) matrices so every
// tensor serializes and updates through the same code path. The embedding
// row at blank_id doubles as the start-of-sequence symbol; blank never
// occurs inside a label sequence, so the row is otherwise unused.
struct ModelParams {
  ModelDims dims;

  Matrix enc_w_in;    // (enc_hidden, feat_dim)
  Matrix enc_w_rec;   // (enc_hidden, enc_hidden)
  Matrix enc_bias;    // (1, enc_hidden)
  Matrix embedding;   // (vocab_size, embed_dim)
  Matrix pred_w_in;   // (pred_hidden, embed_dim)
  Matrix pred_w_rec;  // (pred_hidden, pred_hidden)
  Matrix pred_bias;   // (1, pred_hidden)
  Matrix joint_w_enc;   // (joint_dim, enc_hidden)
  Matrix joint_w_pred;  // (joint_dim, pred_hidden)
  Matrix joint_bias;    // (1, joint_dim)
  Matrix out_w;     // (vocab_size, joint_dim)
  Matrix out_bias;  // (1, vocab_size)

  // Fixed name/tensor iteration order; optimizer state, checkpointing and
  // gradient reductions all rely on it.
  std::vector<std::pair<std::string, Matrix *>> Tensors();
  std::vector<std::pair<std::string, const Matrix *>> Tensors() const;
};

// Zero tensors shaped for the given dimensions (gradient accumulators).
ModelParams ZeroParams(const ModelDims &dims);

// Seeded init, uniform in [-s, s] with s = 1/sqrt(fan-in) per tensor.
ModelParams InitParams(uint64_t seed, const ModelDims &dims);

// lattice(t, u, k) = joint(enc_t, pred_u); pred_0 is the start-symbol state.
LogitLattice ForwardLattice(const ModelParams &params, const Matrix &features,
                            std::span<const int> labels);

// Reverse-mode accumulation of d loss / d params from d loss / d logits.
ModelParams BackwardLattice(const ModelParams &params, const Matrix &features,
                            std::span<const int> labels,
                            const Tensor3 &grad_logits);

// JSON checkpoint: format_version, dimension header, flat row-major
// parameter arrays. Round-trips bit-exactly.
void SaveCheckpoint(const ModelParams &params, const std::string &path);
ModelParams LoadCheckpoint(const std::string &path);

// TransducerScorer over (params, features); encoder states are computed
// once at construction. Shares its arithmetic with ForwardLattice, so
// incremental scores match batch lattices bit for bit.
class ModelScorer : public TransducerScorer {
 public:
  ModelScorer(const ModelParams &params, const Matrix &features);

  int vocab_size() const override { return params_.dims.vocab_size; }
  int blank_id() const override { return params_.dims.blank_id; }
  int eos_id() const override { return params_.dims.eos_id; }
  int num_frames() const override { return enc_states_.rows(); }

  State StartState() const override;
  State Advance(const State &state, int token) const override;
  std::vector<double> Logits(int frame, const State &state) const override;

 private:
  const ModelParams &params_;
  Matrix enc_states_;  // (T, enc_hidden)
};

}  // namespace mwer

#endif  // MWER_MODEL_H_
