// mwer/gradcheck.h
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
// Central-finite-difference verification of every analytic gradient path.
// The numeric side only ever evaluates forward passes, so it stays an
// independent check on the backward implementations.

#ifndef MWER_GRADCHECK_H_
#define MWER_GRADCHECK_H_

#include <cstdint>

namespace mwer {

struct GradCheckOptions {
  uint64_t seed = 0;
  int lattice_instances = 20;  // transducer loss w.r.t. logits
  int model_instances = 5;     // transducer loss w.r.t. parameters
  int mwer_instances = 5;      // expected-error loss w.r.t. parameters
  double step = 1e-5;
  double lattice_tolerance = 1e-4;
  double model_tolerance = 1e-4;
  double mwer_tolerance = 1e-3;
};

struct GradCheckReport {
  double lattice_max_rel_error = 0.0;
  double model_max_rel_error = 0.0;
  double mwer_max_rel_error = 0.0;
  bool lattice_ok = false;
  bool model_ok = false;
  bool mwer_ok = false;
  bool ok() const { return lattice_ok && model_ok && mwer_ok; }
};

GradCheckReport RunGradChecks(const GradCheckOptions &options = {});

}  // namespace mwer

#endif  // MWER_GRADCHECK_H_
