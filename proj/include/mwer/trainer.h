// mwer/trainer.h
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
// Training loops. Likelihood training minimizes the transducer loss;
// expected-error training decodes an N-best list per utterance, recomputes
// exact hypothesis scores, and descends the expected word errors. The
// split-decode variant alternates offline parallel decoding of a data
// split with training against the persisted lists; with one batch per
// split it reproduces the on-the-fly parameter trajectory bit for bit.

#ifndef MWER_TRAINER_H_
#define MWER_TRAINER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mwer/dataset.h"
#include "mwer/decoder.h"
#include "mwer/model.h"
#include "mwer/mwer_loss.h"
#include "mwer/nbest.h"

namespace mwer {

// Linear warmup from zero, constant plateau, exponential decay to
// lr_final, clamped there afterward. Continuous at phase boundaries.
struct TrainSchedule {
  int warmup_steps = 0;
  int constant_steps = 0;
  int decay_steps = 0;
  double lr_constant = 5e-4;
  double lr_final = 1e-5;
};

double LrAt(const TrainSchedule &schedule, int64_t step);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over the model's tensor list.
class AdamState {
 public:
  explicit AdamState(const ModelDims &dims, const AdamConfig &config = {});

  void Step(ModelParams *params, const ModelParams &grads, double lr);

  int64_t steps() const { return steps_; }
  const AdamConfig &config() const { return config_; }

 private:
  AdamConfig config_;
  int64_t steps_ = 0;
  ModelParams first_moment_;
  ModelParams second_moment_;
};

// Decodes every utterance against an immutable parameter snapshot using a
// small worker pool; results are positionally ordered, so the output is
// identical for any worker count. Lists carry utterance id and reference.
std::vector<NBestList> DecodeDataset(const ModelParams &params,
                                     std::span<const Utterance> utterances,
                                     const DecodeConfig &config, int workers);

// Top-1 error breakdown plus the expected-error loss (exact-rescored) of
// the decoded dev set.
struct DevMetrics {
  double mean_expected_errors = 0.0;
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t ref_tokens = 0;
  double wer() const {
    return ref_tokens == 0
               ? 0.0
               : static_cast<double>(substitutions + insertions + deletions) /
                     static_cast<double>(ref_tokens);
  }
};

DevMetrics EvalDev(const ModelParams &params,
                   std::span<const Utterance> utterances,
                   const DecodeConfig &config, int strip_token, int workers);

struct DevPoint {
  int64_t step = 0;
  DevMetrics metrics;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_curve;  // mean batch loss per step
  std::vector<DevPoint> dev_curve;
  int skipped_utterances = 0;
};

struct RnntTrainConfig {
  TrainSchedule schedule{0, 0, 0, 5e-4, 1e-5};
  int batch_size = 8;
  int steps = 1000;
  uint64_t seed = 0;
  bool shuffle = true;         // seeded epoch shuffling
  bool append_eos = false;     // append the vocab EOS to references
  double grad_clip_norm = 0.0; // 0 disables clipping
};

TrainResult TrainRnnt(const Dataset &train, const ModelParams &seed_params,
                      const RnntTrainConfig &config);

struct MwerTrainConfig {
  TrainSchedule schedule{0, 0, 0, 1e-5, 1e-6};
  int batch_size = 8;
  int steps = 200;  // on-the-fly step count; the semi plan derives its own
  DecodeConfig decode;  // beam size 4 per the published training setup
  MwerOptions mwer;
  bool append_eos = false;
  double grad_clip_norm = 0.0;
  int dev_every = 200;
  int workers = 1;
  bool adam_reset_per_split = false;
};

// Utterances are consumed in dataset order (no shuffling) so the split
// variant can reproduce this trajectory exactly.
TrainResult TrainMwerOnTheFly(const Dataset &train, const Dataset &dev,
                              const ModelParams &seed_params,
                              const MwerTrainConfig &config);

struct SemiPlan {
  int num_splits = 8;
  int epochs = 1;
};

// Per epoch and split: decode the split with the frozen current model
// (worker pool), persist the N-best lists, then train on the persisted
// lists batch by batch. When out_dir is non-empty, writes
// nbest.e{i}.s{j}.jsonl, model.e{i}.s{j}.json and a run manifest there;
// vocab is required whenever out_dir is set.
TrainResult TrainMwerSemi(const Dataset &train, const Dataset &dev,
                          const ModelParams &seed_params, const SemiPlan &plan,
                          const MwerTrainConfig &config,
                          const std::string &out_dir = "",
                          const Vocab *vocab = nullptr);

}  // namespace mwer

#endif  // MWER_TRAINER_H_
