// mwer/dataset.h
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
// JSON-lines data files. One UtteranceRecord or NBestRecord per line;
// reals round-trip bit-exactly (shortest-round-trip decimal serialization).

#ifndef MWER_DATASET_H_
#define MWER_DATASET_H_

#include <span>
#include <string>
#include <vector>

#include "mwer/nbest.h"
#include "mwer/tensor.h"
#include "mwer/vocab.h"

namespace mwer {

struct Utterance {
  std::string id;
  Matrix features;             // (T, F)
  std::vector<int> reference;  // blank-free token ids
};

using Dataset = std::vector<Utterance>;

void SaveDataset(const Dataset &dataset, const Vocab &vocab,
                 const std::string &path);
Dataset LoadDataset(const std::string &path, const Vocab &vocab);

void SaveNBestFile(std::span<const NBestList> lists, const Vocab &vocab,
                   const std::string &path);
std::vector<NBestList> LoadNBestFile(const std::string &path,
                                     const Vocab &vocab);

}  // namespace mwer

#endif  // MWER_DATASET_H_
