// mwer/synth.cc
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

#include "mwer/synth.h"

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "mwer/common.h"
#include "mwer/rng.h"

namespace mwer {

namespace {

std::string TokenName(int index, int vocab_size) {
  if (vocab_size <= 26) return std::string(1, static_cast<char>('a' + index));
  return "tok" + std::to_string(index);
}

Dataset MakeSplit(Rng &rng, const std::string &prefix, int count,
                  const SynthSpec &spec,
                  const std::vector<Matrix> &templates) {
  Dataset out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Utterance utt;
    utt.id = prefix + "-" + std::to_string(i);
    const int len = rng.UniformInt(spec.min_tokens, spec.max_tokens);
    utt.features = Matrix(len * spec.frames_per_token, spec.feat_dim);
    for (int p = 0; p < len; ++p) {
      const int token = rng.UniformInt(0, spec.vocab_size - 1);
      utt.reference.push_back(token + 1);  // 0 is blank
      const Matrix &tpl = templates[token];
      for (int f = 0; f < spec.frames_per_token; ++f) {
        for (int d = 0; d < spec.feat_dim; ++d) {
          utt.features(p * spec.frames_per_token + f, d) =
              tpl(f, d) + spec.noise * rng.Normal();
        }
      }
    }
    out.push_back(std::move(utt));
  }
  return out;
}

}  // namespace

SynthTask GenSynth(const SynthSpec &spec) {
  if (spec.vocab_size < 2) {
    throw std::invalid_argument("synthetic task needs at least 2 real tokens");
  }
  if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens ||
      spec.frames_per_token < 1 || spec.feat_dim < 1) {
    throw std::invalid_argument("invalid synthetic task shape");
  }
  if (spec.noise < 0.0 || spec.confusability < 0.0 ||
      spec.confusability > 1.0) {
    throw std::invalid_argument("noise must be >= 0 and confusability in "
                                "[0, 1]");
  }
  if (2 * spec.confusion_pairs > spec.vocab_size) {
    throw std::invalid_argument("not enough tokens for the confusion pairs");
  }

  Rng rng(spec.seed);

  std::vector<std::string> names;
  names.push_back("<blank>");
  for (int i = 0; i < spec.vocab_size; ++i) {
    names.push_back(TokenName(i, spec.vocab_size));
  }
  int eos_id = -1;
  if (spec.add_eos) {
    eos_id = static_cast<int>(names.size());
    names.push_back("<eos>");
  }
  Vocab vocab(std::move(names), 0, eos_id);

  std::vector<Matrix> templates;
  templates.reserve(spec.vocab_size);
  for (int k = 0; k < spec.vocab_size; ++k) {
    Matrix tpl(spec.frames_per_token, spec.feat_dim);
    for (double &v : tpl.data()) v = rng.Uniform(-1.0, 1.0);
    templates.push_back(std::move(tpl));
  }
  // Pull each pair's second template toward the first.
  for (int p = 0; p < spec.confusion_pairs; ++p) {
    const Matrix &anchor = templates[2 * p];
    Matrix &other = templates[2 * p + 1];
    for (size_t e = 0; e < other.data().size(); ++e) {
      other.data()[e] = spec.confusability * anchor.data()[e] +
                        (1.0 - spec.confusability) * other.data()[e];
    }
  }

  SynthTask task{std::move(vocab), {}, {}, {}};
  task.train = MakeSplit(rng, "train", spec.num_train, spec, templates);
  task.dev = MakeSplit(rng, "dev", spec.num_dev, spec, templates);
  task.test = MakeSplit(rng, "test", spec.num_test, spec, templates);
  return task;
}

void WriteSynthTask(const SynthTask &task, const SynthSpec &spec,
                    const std::string &dir) {
  std::filesystem::create_directories(dir);
  task.vocab.Save(dir + "/vocab.json");
  SaveDataset(task.train, task.vocab, dir + "/train.jsonl");
  SaveDataset(task.dev, task.vocab, dir + "/dev.jsonl");
  SaveDataset(task.test, task.vocab, dir + "/test.jsonl");

  nlohmann::json j;
  j["num_train"] = spec.num_train;
  j["num_dev"] = spec.num_dev;
  j["num_test"] = spec.num_test;
  j["vocab_size"] = spec.vocab_size;
  j["min_tokens"] = spec.min_tokens;
  j["max_tokens"] = spec.max_tokens;
  j["frames_per_token"] = spec.frames_per_token;
  j["feat_dim"] = spec.feat_dim;
  j["noise"] = spec.noise;
  j["confusability"] = spec.confusability;
  j["confusion_pairs"] = spec.confusion_pairs;
  j["add_eos"] = spec.add_eos;
  j["seed"] = spec.seed;
  std::ofstream out(dir + "/task.json");
  if (!out) throw DataError("cannot write task manifest in " + dir);
  out << j.dump(2) << "\n";
}

}  // namespace mwer
