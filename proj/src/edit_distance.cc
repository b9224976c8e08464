// mwer/edit_distance.cc
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

#include "mwer/edit_distance.h"

#include <vector>

#include "mwer/tensor.h"

namespace mwer {

ErrorCount EditDistance(std::span<const int> hyp, std::span<const int> ref) {
  const int n = static_cast<int>(hyp.size());
  const int m = static_cast<int>(ref.size());

  // d(i, j): distance between hyp[0:i] and ref[0:j].
  Matrix d(n + 1, m + 1);
  for (int i = 0; i <= n; ++i) d(i, 0) = i;
  for (int j = 0; j <= m; ++j) d(0, j) = j;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      const double diag = d(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      const double ins = d(i - 1, j) + 1;
      const double del = d(i, j - 1) + 1;
      d(i, j) = std::min(diag, std::min(ins, del));
    }
  }

  // Backtrace with the fixed preference diag > insertion > deletion so the
  // breakdown is reproducible; the total is preference-independent.
  ErrorCount count;
  int i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d(i, j) == d(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      if (hyp[i - 1] != ref[j - 1]) ++count.substitutions;
      --i;
      --j;
    } else if (i > 0 && d(i, j) == d(i - 1, j) + 1) {
      ++count.insertions;
      --i;
    } else {
      ++count.deletions;
      --j;
    }
  }
  return count;
}

}  // namespace mwer
