// mwer/synth.h
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
// Synthetic recognition task. Every token owns a fixed multi-frame feature
// template; utterances concatenate templates plus seeded Gaussian noise.
// Confusion pairs blend selected templates toward each other so the
// achievable error rate and the top-1/oracle gap are controllable.

#ifndef MWER_SYNTH_H_
#define MWER_SYNTH_H_

#include <cstdint>
#include <string>

#include "mwer/dataset.h"
#include "mwer/vocab.h"

namespace mwer {

struct SynthSpec {
  int num_train = 500;
  int num_dev = 100;
  int num_test = 100;
  int vocab_size = 10;  // real tokens; blank (and optional EOS) are extra
  int min_tokens = 3;
  int max_tokens = 8;
  int frames_per_token = 3;
  int feat_dim = 8;
  double noise = 0.3;
  // 0: independent templates. 1: paired templates collapse onto each other.
  double confusability = 0.0;
  int confusion_pairs = 0;
  bool add_eos = false;
  uint64_t seed = 0;
};

struct SynthTask {
  Vocab vocab;
  Dataset train;
  Dataset dev;
  Dataset test;
};

SynthTask GenSynth(const SynthSpec &spec);

// Writes train/dev/test.jsonl, vocab.json and a task.json echo of the spec.
void WriteSynthTask(const SynthTask &task, const SynthSpec &spec,
                    const std::string &dir);

}  // namespace mwer

#endif  // MWER_SYNTH_H_
