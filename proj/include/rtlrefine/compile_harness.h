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

// Compile and simulate candidate Verilog with an external toolchain
// (Icarus Verilog by default) and classify the outcome.
//
// Every invocation gets a fresh directory and refers to its files by relative
// name (design.v, tb.v, extra_N.v), so compiler messages do not depend on
// where the temporary directory happened to be created.

#ifndef RTLREFINE_COMPILE_HARNESS_H_
#define RTLREFINE_COMPILE_HARNESS_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rtlrefine/process.h"
#include "rtlrefine/verilog_text.h"
#include "rtlrefine/worker_pool.h"

namespace rtlrefine {

struct ToolchainConfig {
  std::string compile_command = "iverilog -o {out} {src}";
  std::string simulate_command = "vvp {bin}";
  int compile_timeout_s = 30;
  int simulate_timeout_s = 60;
  // ECMAScript regex, matched case-insensitively against simulation output.
  std::string failure_pattern = "mismatch|error";
  std::filesystem::path temp_root;  // empty: the system temp directory
  bool keep_artifacts = false;
  int max_concurrent = 0;  // 0: hardware concurrency

  // Throws std::invalid_argument.
  void validate() const;
};

nlohmann::json to_json(const ToolchainConfig& c);
ToolchainConfig toolchain_config_from_json(const nlohmann::json& j);

enum class Severity { kError, kWarning };

struct Diagnostic {
  Severity severity = Severity::kError;
  std::string file;
  std::optional<int> line;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

enum class CompileStatus { kPass, kSyntaxError, kToolError, kTimeout };
enum class SimStatus { kPass, kMismatch, kRuntimeError, kTimeout };

std::string_view CompileStatusName(CompileStatus s);
CompileStatus ParseCompileStatus(std::string_view name);
std::string_view SimStatusName(SimStatus s);

struct CompileResult {
  CompileStatus status = CompileStatus::kToolError;
  std::vector<Diagnostic> diagnostics;
  std::string raw_output;
  std::int64_t elapsed_ms = 0;
  std::optional<std::filesystem::path> artifacts_dir;  // set when kept
};

struct SimResult {
  SimStatus status = SimStatus::kRuntimeError;
  std::string raw_output;
  std::int64_t elapsed_ms = 0;
};

struct TestbenchResult {
  CompileResult compile;
  std::optional<SimResult> sim;  // absent when compilation failed

  bool passed() const { return sim && sim->status == SimStatus::kPass; }
};

// Recognizes `file:line: message` and `file:line: error|warning: message`.
// Lines that match neither are joined into one trailing diagnostic without a
// line number. Blank lines are ignored.
std::vector<Diagnostic> parse_diagnostics(std::string_view raw_output);

CompileResult classify_compile(const ProcessOutcome& outcome);
SimResult classify_simulation(const ProcessOutcome& outcome, const std::regex& failure_pattern);

class Toolchain {
 public:
  virtual ~Toolchain() = default;

  // Never throws for tool-level failures; they are reported in the status.
  virtual CompileResult compile(const SourceText& code,
                                const std::vector<SourceText>& extra_sources) = 0;
  // Compiles code together with the testbench and, if that passes, runs it.
  virtual TestbenchResult run_testbench(const SourceText& code, const SourceText& testbench) = 0;

  // run_testbench reduced to its simulation verdict; a failed compile is a
  // RuntimeError carrying the compiler output.
  SimResult simulate(const SourceText& code, const SourceText& testbench);

  virtual const ToolchainConfig& config() const = 0;
};

// Runs the configured shell command templates.
class ProcessToolchain : public Toolchain {
 public:
  explicit ProcessToolchain(ToolchainConfig cfg);

  CompileResult compile(const SourceText& code, const std::vector<SourceText>& extra_sources) override;
  TestbenchResult run_testbench(const SourceText& code, const SourceText& testbench) override;
  const ToolchainConfig& config() const override { return cfg_; }

 private:
  struct WorkDir;
  CompileResult compile_in(const WorkDir& dir, const std::vector<std::string>& sources);

  ToolchainConfig cfg_;
  std::regex failure_re_;
  Semaphore slots_;
};

// Scripted toolchain. The first rule whose `contains` substring occurs in the
// design code (and whose optional `testbench_contains` occurs in the
// testbench) decides the outcome; otherwise `default` applies. Outcomes are
// {exit_code, output, timeout, spawn_error} and go through the same
// classification as real tool runs.
class MockToolchain : public Toolchain {
 public:
  struct Outcome {
    int exit_code = 0;
    std::string output;
    bool timeout = false;
    bool spawn_error = false;
  };
  struct Rule {
    std::string contains;
    std::string testbench_contains;
    std::optional<Outcome> compile;
    std::optional<Outcome> simulate;
  };

  MockToolchain();
  explicit MockToolchain(ToolchainConfig cfg);
  MockToolchain(ToolchainConfig cfg, std::vector<Rule> rules, Outcome default_compile,
                Outcome default_simulate);

  static std::shared_ptr<MockToolchain> from_json(const nlohmann::json& j, ToolchainConfig cfg = {});
  static std::shared_ptr<MockToolchain> from_file(const std::filesystem::path& path,
                                                  ToolchainConfig cfg = {});

  CompileResult compile(const SourceText& code, const std::vector<SourceText>& extra_sources) override;
  TestbenchResult run_testbench(const SourceText& code, const SourceText& testbench) override;
  const ToolchainConfig& config() const override { return cfg_; }

  std::int64_t compile_calls() const { return compile_calls_.load(); }
  std::int64_t simulate_calls() const { return simulate_calls_.load(); }

 private:
  const Rule* match(std::string_view code, std::string_view testbench) const;
  static ProcessOutcome to_outcome(const Outcome& o);

  ToolchainConfig cfg_;
  std::vector<Rule> rules_;
  Outcome default_compile_;
  Outcome default_simulate_;
  std::regex failure_re_;
  std::atomic<std::int64_t> compile_calls_{0};
  std::atomic<std::int64_t> simulate_calls_{0};
};

nlohmann::json to_json(const Diagnostic& d);
nlohmann::json to_json(const CompileResult& r);  // without elapsed_ms
Diagnostic diagnostic_from_json(const nlohmann::json& j);
CompileResult compile_result_from_json(const nlohmann::json& j);

}  // namespace rtlrefine

#endif  // RTLREFINE_COMPILE_HARNESS_H_
