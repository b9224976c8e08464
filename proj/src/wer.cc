// mwer/wer.cc
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

#include "mwer/wer.h"

#include <iomanip>
#include <map>
#include <ostream>
#include <vector>

#include "json.hpp"
#include "mwer/common.h"
#include "mwer/edit_distance.h"

namespace mwer {

namespace {

std::vector<int> Stripped(std::span<const int> tokens, int strip_token) {
  std::vector<int> out;
  for (int t : tokens) {
    if (t != strip_token) out.push_back(t);
  }
  return out;
}

}  // namespace

WerReport ComputeWer(std::span<const NBestList> hyps, const Dataset &refs,
                     int strip_token, std::optional<double> baseline_wer) {
  std::map<std::string, const Utterance *> by_id;
  for (const Utterance &utt : refs) by_id[utt.id] = &utt;
  if (by_id.size() != refs.size()) {
    throw DataError("reference set contains duplicate utterance ids");
  }

  WerReport report;
  std::string missing, extra;
  std::map<std::string, bool> seen;
  for (const NBestList &list : hyps) {
    auto it = by_id.find(list.utterance_id);
    if (it == by_id.end()) {
      extra += (extra.empty() ? "" : ", ") + list.utterance_id;
      continue;
    }
    if (seen[list.utterance_id]) {
      throw DataError("duplicate hypothesis id '" + list.utterance_id + "'");
    }
    seen[list.utterance_id] = true;
  }
  for (const Utterance &utt : refs) {
    if (!seen[utt.id]) missing += (missing.empty() ? "" : ", ") + utt.id;
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "hypothesis/reference id mismatch";
    if (!missing.empty()) msg += "; missing hypotheses for: " + missing;
    if (!extra.empty()) msg += "; hypotheses without references: " + extra;
    throw DataError(msg);
  }

  for (const NBestList &list : hyps) {
    const Utterance &ref = *by_id.at(list.utterance_id);
    const std::vector<int> ref_tokens = Stripped(ref.reference, strip_token);
    report.ref_tokens += static_cast<int64_t>(ref_tokens.size());
    ++report.num_utterances;
    std::vector<int> top1;
    if (!list.hypotheses.empty()) {
      top1 = Stripped(list.hypotheses[0].tokens, strip_token);
    }
    const ErrorCount count = EditDistance(top1, ref_tokens);
    report.substitutions += count.substitutions;
    report.insertions += count.insertions;
    report.deletions += count.deletions;
  }
  if (baseline_wer.has_value()) {
    if (!(*baseline_wer > 0.0)) {
      throw std::invalid_argument("baseline WER must be positive");
    }
    report.normalized_wer = report.wer() / *baseline_wer;
  }
  return report;
}

void PrintWerReport(std::ostream &os, const WerReport &report) {
  os << "%WER " << std::fixed << std::setprecision(2) << 100.0 * report.wer()
     << " [ " << report.total_errors() << " / " << report.ref_tokens << ", "
     << report.insertions << " ins, " << report.deletions << " del, "
     << report.substitutions << " sub ] over " << report.num_utterances
     << " utterances\n";
  if (report.normalized_wer.has_value()) {
    os << "normalized WER " << std::setprecision(3) << *report.normalized_wer
       << " (vs named baseline)\n";
  }
  os.unsetf(std::ios_base::floatfield);
}

nlohmann::json WerReportToJson(const WerReport &report) {
  nlohmann::json j;
  j["wer"] = report.wer();
  j["substitutions"] = report.substitutions;
  j["insertions"] = report.insertions;
  j["deletions"] = report.deletions;
  j["total_errors"] = report.total_errors();
  j["ref_tokens"] = report.ref_tokens;
  j["num_utterances"] = report.num_utterances;
  if (report.normalized_wer.has_value()) {
    j["normalized_wer"] = *report.normalized_wer;
  } else {
    j["normalized_wer"] = nullptr;
  }
  return j;
}

}  // namespace mwer
