// mwer/vocab.h
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

#ifndef MWER_VOCAB_H_
#define MWER_VOCAB_H_

#include <map>
#include <span>
#include <string>
#include <vector>

namespace mwer {

// Token-name table with designated blank (and optional EOS) entries.
class Vocab {
 public:
  Vocab(std::vector<std::string> tokens, int blank_id, int eos_id = -1);

  int size() const { return static_cast<int>(tokens_.size()); }
  int blank_id() const { return blank_id_; }
  int eos_id() const { return eos_id_; }  // -1 when absent

  const std::string &Name(int id) const;
  // Throws DataError for names outside the vocabulary.
  int Id(const std::string &name) const;

  std::vector<std::string> Names(std::span<const int> ids,
                                 bool strip_eos = false) const;
  std::vector<int> Ids(std::span<const std::string> names) const;

  void Save(const std::string &path) const;
  static Vocab Load(const std::string &path);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
  int blank_id_;
  int eos_id_;
};

}  // namespace mwer

#endif  // MWER_VOCAB_H_
