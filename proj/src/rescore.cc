// mwer/rescore.cc
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

#include "mwer/rescore.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "mwer/common.h"
#include "mwer/decoder.h"

namespace mwer {

using nlohmann::json;

NGramLM::NGramLM(int order, double delta) : order_(order), delta_(delta) {
  if (order < 1) throw std::invalid_argument("n-gram order must be >= 1");
  if (!(delta > 0.0)) {
    throw std::invalid_argument("add-delta smoothing needs delta > 0");
  }
}

std::string NGramLM::MapToken(const std::string &token) const {
  if (token == kSentenceEnd || token == kUnknown) return token;
  return vocab_.count(token) ? token : kUnknown;
}

std::string NGramLM::ContextKey(std::span<const std::string> context) const {
  // Last order-1 history entries, left-padded with sentence start.
  const int width = order_ - 1;
  std::vector<std::string> window(width, kSentenceStart);
  const int take = std::min<int>(width, static_cast<int>(context.size()));
  for (int i = 0; i < take; ++i) {
    const std::string &raw = context[context.size() - take + i];
    window[width - take + i] =
        (raw == kSentenceStart) ? raw : MapToken(raw);
  }
  std::string key;
  for (int i = 0; i < width; ++i) {
    if (i > 0) key += ' ';
    key += window[i];
  }
  return key;
}

void NGramLM::Train(const std::vector<std::vector<std::string>> &corpus) {
  for (const auto &sentence : corpus) {
    for (const std::string &token : sentence) ++vocab_[token];
  }
  for (const auto &sentence : corpus) {
    for (size_t i = 0; i <= sentence.size(); ++i) {
      std::span<const std::string> history(sentence.data(), i);
      const std::string token =
          (i == sentence.size()) ? kSentenceEnd : sentence[i];
      const std::string key = ContextKey(history);
      ++counts_[key][token];
      ++context_totals_[key];
    }
  }
}

std::vector<std::string> NGramLM::ClosedVocab() const {
  std::vector<std::string> out;
  out.reserve(vocab_.size() + 2);
  for (const auto &[token, n] : vocab_) out.push_back(token);
  out.push_back(kSentenceEnd);
  out.push_back(kUnknown);
  return out;
}

double NGramLM::CondLogProb(std::span<const std::string> context,
                            const std::string &token) const {
  const std::string key = ContextKey(context);
  const std::string word = MapToken(token);
  const int64_t closed = static_cast<int64_t>(vocab_.size()) + 2;

  int64_t joint = 0;
  auto ctx_it = counts_.find(key);
  if (ctx_it != counts_.end()) {
    auto tok_it = ctx_it->second.find(word);
    if (tok_it != ctx_it->second.end()) joint = tok_it->second;
  }
  int64_t total = 0;
  auto tot_it = context_totals_.find(key);
  if (tot_it != context_totals_.end()) total = tot_it->second;

  return std::log(static_cast<double>(joint) + delta_) -
         std::log(static_cast<double>(total) + delta_ * closed);
}

double NGramLM::Score(std::span<const std::string> tokens) const {
  double lp = 0.0;
  for (size_t i = 0; i <= tokens.size(); ++i) {
    std::span<const std::string> history(tokens.data(), i);
    const std::string &token =
        (i == tokens.size()) ? std::string(kSentenceEnd) : tokens[i];
    lp += CondLogProb(history, token);
  }
  return lp;
}

void NGramLM::Save(const std::string &path) const {
  json j;
  j["order"] = order_;
  j["delta"] = delta_;
  json vocab = json::array();
  for (const auto &[token, n] : vocab_) {
    vocab.push_back(json{{"token", token}, {"count", n}});
  }
  j["vocab"] = std::move(vocab);
  json counts = json::object();
  for (const auto &[key, table] : counts_) {
    json row = json::object();
    for (const auto &[token, n] : table) row[token] = n;
    counts[key] = std::move(row);
  }
  j["counts"] = std::move(counts);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open LM file for writing: " + path);
  out << j.dump() << "\n";
}

NGramLM NGramLM::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open LM file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw DataError("LM file " + path + ": " + e.what());
  }
  if (!j.contains("order") || !j["order"].is_number_integer() ||
      !j.contains("delta") || !j["delta"].is_number()) {
    throw DataError("LM file " + path + ": order/delta missing");
  }
  NGramLM lm(j["order"].get<int>(), j["delta"].get<double>());
  if (!j.contains("vocab") || !j["vocab"].is_array() ||
      !j.contains("counts") || !j["counts"].is_object()) {
    throw DataError("LM file " + path + ": vocab/counts missing");
  }
  for (const auto &entry : j["vocab"]) {
    if (!entry.contains("token") || !entry.contains("count")) {
      throw DataError("LM file " + path + ": malformed vocab entry");
    }
    lm.vocab_[entry["token"].get<std::string>()] =
        entry["count"].get<int64_t>();
  }
  for (const auto &[key, table] : j["counts"].items()) {
    int64_t total = 0;
    for (const auto &[token, n] : table.items()) {
      if (!n.is_number_integer()) {
        throw DataError("LM file " + path + ": counts." + key + "." + token +
                        " is not an integer");
      }
      lm.counts_[key][token] = n.get<int64_t>();
      total += n.get<int64_t>();
    }
    lm.context_totals_[key] = total;
  }
  return lm;
}

NBestList RnntRescore(NBestList nbest, const TransducerScorer &scorer,
                      double temperature) {
  if (nbest.hypotheses.empty()) {
    throw std::invalid_argument("cannot rescore an empty N-best list");
  }
  for (Hypothesis &hyp : nbest.hypotheses) {
    hyp.log_score = ExactScore(scorer, hyp.tokens, temperature);
    hyp.source = ScoreSource::kExact;
  }
  SortHypotheses(&nbest.hypotheses);
  return nbest;
}

NBestList LmRescore(NBestList nbest, const NGramLM &lm,
                    const RescoreConfig &config, const Vocab &vocab) {
  if (nbest.hypotheses.empty()) {
    throw std::invalid_argument("cannot rescore an empty N-best list");
  }
  if (config.lm_weight < 0.0) {
    throw std::invalid_argument("lm_weight must be non-negative");
  }
  for (Hypothesis &hyp : nbest.hypotheses) {
    const std::vector<std::string> words =
        vocab.Names(hyp.tokens, /*strip_eos=*/true);
    const double lm_score = lm.Score(words);
    const double length =
        config.length_normalize ? std::max<size_t>(words.size(), 1) : 1;
    hyp.log_score += config.lm_weight * lm_score / length;
  }
  // Stable so lm_weight = 0 reproduces the incoming order exactly.
  std::stable_sort(nbest.hypotheses.begin(), nbest.hypotheses.end(),
                   [](const Hypothesis &a, const Hypothesis &b) {
                     return a.log_score > b.log_score;
                   });
  return nbest;
}

}  // namespace mwer
