// mwer/cli.h
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

#ifndef MWER_CLI_H_
#define MWER_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace mwer {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric-invariant
// failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Runs one toolkit command; argv excludes the program name. Output goes to
// the provided stream (stdout in the binary, a capture buffer in tests).
int RunCli(const std::vector<std::string> &argv, std::ostream &out);

}  // namespace mwer

#endif  // MWER_CLI_H_
