// Copyright 2026 The rtlrefine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef RTLREFINE_TOOLS_CLI_H_
#define RTLREFINE_TOOLS_CLI_H_

#include <atomic>
#include <ostream>
#include <string>
#include <vector>

namespace rtlrefine::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitUnreachable = 4;
inline constexpr int kExitInvariant = 5;
inline constexpr int kExitInterrupted = 130;

// Set asynchronously (SIGINT) to drain the running stage.
std::atomic<bool>& stop_flag();

// args excludes the program name. Logs go to `err`, reports and help to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rtlrefine::cli

#endif  // RTLREFINE_TOOLS_CLI_H_
