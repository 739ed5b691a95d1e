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

#include "rtlrefine/process.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <ctime>
#include <cstring>

namespace rtlrefine {
namespace {

void AppendCapped(std::string& out, const char* data, std::size_t n) {
  if (out.size() >= kMaxCapturedOutput) return;
  out.append(data, std::min(n, kMaxCapturedOutput - out.size()));
}

[[noreturn]] void ChildExec(int write_fd, const std::string& command, const std::string& cwd) {
  setpgid(0, 0);
  const int devnull = open("/dev/null", O_RDONLY);
  if (devnull >= 0) dup2(devnull, STDIN_FILENO);
  dup2(write_fd, STDOUT_FILENO);
  dup2(write_fd, STDERR_FILENO);
  if (!cwd.empty() && chdir(cwd.c_str()) != 0) {
    const char msg[] = "rtlrefine: cannot enter working directory\n";
    [[maybe_unused]] auto n = write(STDERR_FILENO, msg, sizeof msg - 1);
    _exit(127);
  }
  execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
  _exit(127);
}

}  // namespace

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

ProcessOutcome run_shell(const std::string& command, const std::filesystem::path& cwd,
                         std::chrono::milliseconds timeout) {
  using Clock = std::chrono::steady_clock;
  ProcessOutcome outcome;
  const auto start = Clock::now();
  auto finish = [&] {
    outcome.elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    return outcome;
  };

  int fds[2];
  if (pipe2(fds, O_CLOEXEC) != 0) {
    outcome.spawn_failed = true;
    outcome.output = std::string("pipe: ") + std::strerror(errno);
    return finish();
  }
  const std::string cwd_str = cwd.string();
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    outcome.spawn_failed = true;
    outcome.output = std::string("fork: ") + std::strerror(errno);
    return finish();
  }
  if (pid == 0) ChildExec(fds[1], command, cwd_str);

  // Also set from the parent so a kill right after fork reaches the group.
  setpgid(pid, pid);
  close(fds[1]);
  const int read_fd = fds[0];
  fcntl(read_fd, F_SETFL, fcntl(read_fd, F_GETFL) | O_NONBLOCK);

  const auto deadline = start + timeout;
  char buf[8192];
  bool pipe_open = true;
  bool exited = false;
  int status = 0;
  while (true) {
    if (!exited) {
      const pid_t w = waitpid(pid, &status, WNOHANG);
      if (w == pid) exited = true;
    }
    if (exited && !pipe_open) break;
    const auto now = Clock::now();
    if (!exited && now >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      outcome.timed_out = true;
      exited = true;
      break;
    }
    if (pipe_open) {
      pollfd pfd{read_fd, POLLIN, 0};
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
      const int wait_ms = exited ? 0 : static_cast<int>(std::clamp<std::int64_t>(left.count(), 1, 20));
      const int pr = poll(&pfd, 1, wait_ms);
      if (pr > 0) {
        const ssize_t n = read(read_fd, buf, sizeof buf);
        if (n > 0) {
          AppendCapped(outcome.output, buf, static_cast<std::size_t>(n));
          continue;
        }
        if (n == 0 || (errno != EAGAIN && errno != EINTR)) pipe_open = false;
      } else if (exited) {
        // Child is gone and nothing is pending; stragglers holding the pipe
        // are not waited for.
        break;
      }
    } else {
      struct timespec ts{0, 5'000'000};
      nanosleep(&ts, nullptr);
    }
  }
  // Drain whatever is buffered, then make sure no descendants survive.
  for (;;) {
    const ssize_t n = read(read_fd, buf, sizeof buf);
    if (n <= 0) break;
    AppendCapped(outcome.output, buf, static_cast<std::size_t>(n));
  }
  kill(-pid, SIGKILL);
  close(read_fd);

  if (!outcome.timed_out) {
    if (WIFEXITED(status)) {
      outcome.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
      outcome.term_signal = WTERMSIG(status);
    }
  }
  return finish();
}

}  // namespace rtlrefine
