// mwer/vocab.cc
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

#include "mwer/vocab.h"

#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "mwer/common.h"

namespace mwer {

using nlohmann::json;

Vocab::Vocab(std::vector<std::string> tokens, int blank_id, int eos_id)
    : tokens_(std::move(tokens)), blank_id_(blank_id), eos_id_(eos_id) {
  if (tokens_.empty() || blank_id_ < 0 || blank_id_ >= size()) {
    throw std::invalid_argument("vocabulary needs a valid blank entry");
  }
  if (eos_id_ >= size() || (eos_id_ >= 0 && eos_id_ == blank_id_)) {
    throw std::invalid_argument("eos_id must differ from blank_id and fit "
                                "the vocabulary");
  }
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw std::invalid_argument("duplicate token name '" + tokens_[i] +
                                  "'");
    }
  }
}

const std::string &Vocab::Name(int id) const {
  if (id < 0 || id >= size()) {
    throw std::invalid_argument("token id " + std::to_string(id) +
                                " outside vocabulary");
  }
  return tokens_[id];
}

int Vocab::Id(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw DataError("token name '" + name + "' not in vocabulary");
  }
  return it->second;
}

std::vector<std::string> Vocab::Names(std::span<const int> ids,
                                      bool strip_eos) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (strip_eos && id == eos_id_) continue;
    out.push_back(Name(id));
  }
  return out;
}

std::vector<int> Vocab::Ids(std::span<const std::string> names) const {
  std::vector<int> out;
  out.reserve(names.size());
  for (const std::string &name : names) out.push_back(Id(name));
  return out;
}

void Vocab::Save(const std::string &path) const {
  json j;
  j["tokens"] = tokens_;
  j["blank_id"] = blank_id_;
  if (eos_id_ >= 0) {
    j["eos_id"] = eos_id_;
  } else {
    j["eos_id"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open vocabulary for writing: " + path);
  out << j.dump(2) << "\n";
}

Vocab Vocab::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw DataError("vocabulary " + path + ": " + e.what());
  }
  if (!j.contains("tokens") || !j["tokens"].is_array()) {
    throw DataError("vocabulary " + path + ": tokens missing");
  }
  if (!j.contains("blank_id") || !j["blank_id"].is_number_integer()) {
    throw DataError("vocabulary " + path + ": blank_id missing");
  }
  std::vector<std::string> tokens;
  for (const auto &entry : j["tokens"]) {
    if (!entry.is_string()) {
      throw DataError("vocabulary " + path + ": tokens must be strings");
    }
    tokens.push_back(entry.get<std::string>());
  }
  int eos_id = -1;
  if (j.contains("eos_id") && j["eos_id"].is_number_integer()) {
    eos_id = j["eos_id"].get<int>();
  }
  try {
    return Vocab(std::move(tokens), j["blank_id"].get<int>(), eos_id);
  } catch (const std::invalid_argument &e) {
    throw DataError("vocabulary " + path + ": " + e.what());
  }
}

}  // namespace mwer
