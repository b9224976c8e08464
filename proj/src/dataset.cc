// mwer/dataset.cc
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

#include "mwer/dataset.h"

#include <fstream>

#include "json.hpp"
#include "mwer/common.h"

namespace mwer {

using nlohmann::json;

namespace {

json FeaturesToJson(const Matrix &features) {
  json rows = json::array();
  for (int t = 0; t < features.rows(); ++t) {
    json row = json::array();
    for (int f = 0; f < features.cols(); ++f) row.push_back(features(t, f));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix FeaturesFromJson(const json &rows, const std::string &where) {
  if (!rows.is_array() || rows.empty()) {
    throw DataError(where + ": features must be a non-empty array of rows");
  }
  const int T = static_cast<int>(rows.size());
  if (!rows[0].is_array() || rows[0].empty()) {
    throw DataError(where + ": features rows must be non-empty arrays");
  }
  const int F = static_cast<int>(rows[0].size());
  Matrix features(T, F);
  for (int t = 0; t < T; ++t) {
    if (!rows[t].is_array() || static_cast<int>(rows[t].size()) != F) {
      throw DataError(where + ": ragged feature rows");
    }
    for (int f = 0; f < F; ++f) {
      if (!rows[t][f].is_number()) {
        throw DataError(where + ": non-numeric feature value");
      }
      features(t, f) = rows[t][f].get<double>();
    }
  }
  if (!AllFinite(features.data())) {
    throw DataError(where + ": non-finite feature value");
  }
  return features;
}

std::vector<std::string> StringsFromJson(const json &arr,
                                         const std::string &where) {
  if (!arr.is_array()) throw DataError(where + ": expected an array");
  std::vector<std::string> out;
  for (const auto &entry : arr) {
    if (!entry.is_string()) throw DataError(where + ": expected strings");
    out.push_back(entry.get<std::string>());
  }
  return out;
}

}  // namespace

void SaveDataset(const Dataset &dataset, const Vocab &vocab,
                 const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open dataset for writing: " + path);
  for (const Utterance &utt : dataset) {
    json j;
    j["id"] = utt.id;
    j["features"] = FeaturesToJson(utt.features);
    j["reference"] = vocab.Names(utt.reference);
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("failed writing dataset: " + path);
}

Dataset LoadDataset(const std::string &path, const Vocab &vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);
  Dataset dataset;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw DataError(where + ": " + e.what());
    }
    if (!j.contains("id") || !j["id"].is_string()) {
      throw DataError(where + ": id missing");
    }
    Utterance utt;
    utt.id = j["id"].get<std::string>();
    if (!j.contains("features")) throw DataError(where + ": features missing");
    utt.features = FeaturesFromJson(j["features"], where);
    if (!j.contains("reference")) {
      throw DataError(where + ": reference missing");
    }
    const auto names = StringsFromJson(j["reference"], where + ".reference");
    utt.reference = vocab.Ids(names);
    dataset.push_back(std::move(utt));
  }
  return dataset;
}

void SaveNBestFile(std::span<const NBestList> lists, const Vocab &vocab,
                   const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open N-best file for writing: " + path);
  for (const NBestList &list : lists) {
    json j;
    j["id"] = list.utterance_id;
    j["reference"] = vocab.Names(list.reference);
    json hyps = json::array();
    for (const Hypothesis &hyp : list.hypotheses) {
      hyps.push_back(json{
          {"tokens", vocab.Names(hyp.tokens)},
          {"log_score", hyp.log_score},
          {"score_source",
           hyp.source == ScoreSource::kExact ? "exact" : "beam"}});
    }
    j["hypotheses"] = std::move(hyps);
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("failed writing N-best file: " + path);
}

std::vector<NBestList> LoadNBestFile(const std::string &path,
                                     const Vocab &vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open N-best file: " + path);
  std::vector<NBestList> lists;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw DataError(where + ": " + e.what());
    }
    if (!j.contains("id") || !j["id"].is_string()) {
      throw DataError(where + ": id missing");
    }
    NBestList list;
    list.utterance_id = j["id"].get<std::string>();
    if (!j.contains("reference")) throw DataError(where + ": reference missing");
    list.reference =
        vocab.Ids(StringsFromJson(j["reference"], where + ".reference"));
    if (!j.contains("hypotheses") || !j["hypotheses"].is_array()) {
      throw DataError(where + ": hypotheses missing");
    }
    for (const auto &h : j["hypotheses"]) {
      if (!h.contains("tokens") || !h.contains("log_score") ||
          !h["log_score"].is_number()) {
        throw DataError(where + ": malformed hypothesis");
      }
      Hypothesis hyp;
      hyp.tokens = vocab.Ids(StringsFromJson(h["tokens"], where + ".tokens"));
      hyp.log_score = h["log_score"].get<double>();
      const std::string source = h.value("score_source", "beam");
      if (source == "exact") {
        hyp.source = ScoreSource::kExact;
      } else if (source == "beam") {
        hyp.source = ScoreSource::kBeam;
      } else {
        throw DataError(where + ": unknown score_source '" + source + "'");
      }
      list.hypotheses.push_back(std::move(hyp));
    }
    lists.push_back(std::move(list));
  }
  return lists;
}

}  // namespace mwer
