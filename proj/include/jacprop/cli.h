// Copyright 2026 The jacprop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef JACPROP_CLI_H_
#define JACPROP_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace jacprop {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `jacprop` tool. args[0] is the program name.
/// Subcommands: gen-linear, run, activation-study, spectrum, fit-ltv,
/// simulate. Returns 0 on success, 1 on a runtime failure and 2 on a usage
/// or configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace jacprop

#endif  // JACPROP_CLI_H_
