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

#ifndef RTLREFINE_PROCESS_H_
#define RTLREFINE_PROCESS_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace rtlrefine {

struct ProcessOutcome {
  int exit_code = -1;  // valid when the process exited normally
  int term_signal = 0;
  bool timed_out = false;
  bool spawn_failed = false;
  std::string output;  // stdout and stderr, interleaved
  std::int64_t elapsed_ms = 0;

  bool exited_ok() const { return !timed_out && !spawn_failed && term_signal == 0 && exit_code == 0; }
};

inline constexpr std::size_t kMaxCapturedOutput = std::size_t{1} << 20;

// Runs `/bin/sh -c command` in `cwd` in its own process group. On timeout the
// whole group is killed. Output beyond kMaxCapturedOutput is discarded.
ProcessOutcome run_shell(const std::string& command, const std::filesystem::path& cwd,
                         std::chrono::milliseconds timeout);

// Single-quotes `s` for /bin/sh.
std::string shell_quote(std::string_view s);

}  // namespace rtlrefine

#endif  // RTLREFINE_PROCESS_H_
