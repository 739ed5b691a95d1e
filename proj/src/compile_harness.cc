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

#include "rtlrefine/compile_harness.h"

#include <stdlib.h>

#include <cctype>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "rtlrefine/jsonl.h"

namespace rtlrefine {
namespace {

constexpr std::string_view kDesignFile = "design.v";
constexpr std::string_view kTestbenchFile = "tb.v";
constexpr std::string_view kBinaryFile = "sim.out";

std::size_t CountOccurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string ReplaceOnce(std::string s, std::string_view placeholder, std::string_view value) {
  const std::size_t pos = s.find(placeholder);
  if (pos != std::string::npos) s.replace(pos, placeholder.size(), value);
  return s;
}

std::regex CompileFailurePattern(const std::string& pattern) {
  try {
    return std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error& e) {
    throw std::invalid_argument("invalid failure_pattern '" + pattern + "': " + e.what());
  }
}

std::string Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool StartsWithNoCase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

void WriteSource(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out.flush()) throw IoError("cannot write '" + path.string() + "'");
}

}  // namespace

void ToolchainConfig::validate() const {
  if (CountOccurrences(compile_command, "{src}") != 1 || CountOccurrences(compile_command, "{out}") != 1) {
    throw std::invalid_argument("compile_command must contain {src} and {out} exactly once");
  }
  if (CountOccurrences(simulate_command, "{bin}") != 1) {
    throw std::invalid_argument("simulate_command must contain {bin} exactly once");
  }
  if (compile_timeout_s <= 0 || simulate_timeout_s <= 0) {
    throw std::invalid_argument("toolchain timeouts must be positive");
  }
  if (max_concurrent < 0) throw std::invalid_argument("max_concurrent must be >= 0");
  CompileFailurePattern(failure_pattern);
}

nlohmann::json to_json(const ToolchainConfig& c) {
  return {{"compile_command", c.compile_command},
          {"simulate_command", c.simulate_command},
          {"compile_timeout_s", c.compile_timeout_s},
          {"simulate_timeout_s", c.simulate_timeout_s},
          {"failure_pattern", c.failure_pattern},
          {"temp_root", c.temp_root.string()},
          {"keep_artifacts", c.keep_artifacts},
          {"max_concurrent", c.max_concurrent}};
}

ToolchainConfig toolchain_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"compile_command", "simulate_command", "compile_timeout_s",
                       "simulate_timeout_s", "failure_pattern", "temp_root", "keep_artifacts",
                       "max_concurrent"},
                      "toolchain");
  ToolchainConfig c;
  c.compile_command = j.value("compile_command", c.compile_command);
  c.simulate_command = j.value("simulate_command", c.simulate_command);
  c.compile_timeout_s = j.value("compile_timeout_s", c.compile_timeout_s);
  c.simulate_timeout_s = j.value("simulate_timeout_s", c.simulate_timeout_s);
  c.failure_pattern = j.value("failure_pattern", c.failure_pattern);
  c.temp_root = j.value("temp_root", std::string());
  c.keep_artifacts = j.value("keep_artifacts", c.keep_artifacts);
  c.max_concurrent = j.value("max_concurrent", c.max_concurrent);
  c.validate();
  return c;
}

std::string_view CompileStatusName(CompileStatus s) {
  switch (s) {
    case CompileStatus::kPass: return "Pass";
    case CompileStatus::kSyntaxError: return "SyntaxError";
    case CompileStatus::kToolError: return "ToolError";
    case CompileStatus::kTimeout: return "Timeout";
  }
  return "?";
}

CompileStatus ParseCompileStatus(std::string_view name) {
  for (CompileStatus s : {CompileStatus::kPass, CompileStatus::kSyntaxError,
                          CompileStatus::kToolError, CompileStatus::kTimeout}) {
    if (CompileStatusName(s) == name) return s;
  }
  throw SchemaError("unknown compile status '" + std::string(name) + "'");
}

std::string_view SimStatusName(SimStatus s) {
  switch (s) {
    case SimStatus::kPass: return "Pass";
    case SimStatus::kMismatch: return "Mismatch";
    case SimStatus::kRuntimeError: return "RuntimeError";
    case SimStatus::kTimeout: return "Timeout";
  }
  return "?";
}

std::vector<Diagnostic> parse_diagnostics(std::string_view raw_output) {
  static const std::regex kLocated(R"(^\s*([^:\s][^:]*):(\d+):(?:\d+:)?\s*(.*)$)");
  std::vector<Diagnostic> out;
  std::string unmatched;
  std::size_t pos = 0;
  while (pos < raw_output.size()) {
    std::size_t eol = raw_output.find('\n', pos);
    if (eol == std::string_view::npos) eol = raw_output.size();
    std::string line(raw_output.substr(pos, eol - pos));
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;

    std::smatch m;
    if (std::regex_match(line, m, kLocated)) {
      Diagnostic d;
      d.file = m[1].str();
      try {
        d.line = std::stoi(m[2].str());
      } catch (const std::out_of_range&) {
        d.line = std::nullopt;
      }
      std::string message = Trim(m[3].str());
      if (StartsWithNoCase(message, "warning:")) {
        d.severity = Severity::kWarning;
        message = Trim(std::string_view(message).substr(8));
      } else if (StartsWithNoCase(message, "error:")) {
        message = Trim(std::string_view(message).substr(6));
      }
      d.message = message.empty() ? Trim(line) : message;
      out.push_back(std::move(d));
    } else {
      if (!unmatched.empty()) unmatched += '\n';
      unmatched += Trim(line);
    }
  }
  if (!unmatched.empty()) out.push_back(Diagnostic{Severity::kError, "", std::nullopt, unmatched});
  return out;
}

CompileResult classify_compile(const ProcessOutcome& outcome) {
  CompileResult r;
  r.raw_output = outcome.output;
  r.elapsed_ms = outcome.elapsed_ms;
  r.diagnostics = parse_diagnostics(outcome.output);
  if (outcome.spawn_failed || outcome.term_signal != 0 || outcome.exit_code == 126 ||
      outcome.exit_code == 127) {
    r.status = CompileStatus::kToolError;
  } else if (outcome.timed_out) {
    r.status = CompileStatus::kTimeout;
  } else if (outcome.exit_code != 0) {
    r.status = CompileStatus::kSyntaxError;
    if (r.raw_output.empty()) {
      r.raw_output = "compiler exited with status " + std::to_string(outcome.exit_code) + "\n";
      r.diagnostics = parse_diagnostics(r.raw_output);
    }
  } else {
    r.status = CompileStatus::kPass;
    // A successful compile only ever carries warnings.
    for (Diagnostic& d : r.diagnostics) d.severity = Severity::kWarning;
  }
  return r;
}

SimResult classify_simulation(const ProcessOutcome& outcome, const std::regex& failure_pattern) {
  SimResult r;
  r.raw_output = outcome.output;
  r.elapsed_ms = outcome.elapsed_ms;
  if (outcome.timed_out) {
    r.status = SimStatus::kTimeout;
  } else if (!outcome.exited_ok()) {
    r.status = SimStatus::kRuntimeError;
  } else if (std::regex_search(outcome.output, failure_pattern)) {
    r.status = SimStatus::kMismatch;
  } else {
    r.status = SimStatus::kPass;
  }
  return r;
}

SimResult Toolchain::simulate(const SourceText& code, const SourceText& testbench) {
  TestbenchResult r = run_testbench(code, testbench);
  if (r.sim) return *r.sim;
  return SimResult{SimStatus::kRuntimeError, r.compile.raw_output, r.compile.elapsed_ms};
}

nlohmann::json to_json(const Diagnostic& d) {
  nlohmann::json j = {{"severity", d.severity == Severity::kError ? "Error" : "Warning"},
                      {"file", d.file},
                      {"message", d.message}};
  j["line"] = d.line ? nlohmann::json(*d.line) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const CompileResult& r) {
  nlohmann::json diags = nlohmann::json::array();
  for (const auto& d : r.diagnostics) diags.push_back(to_json(d));
  return {{"status", std::string(CompileStatusName(r.status))},
          {"diagnostics", diags},
          {"raw_output", r.raw_output}};
}

Diagnostic diagnostic_from_json(const nlohmann::json& j) {
  Diagnostic d;
  d.severity = require_string(j, "severity") == "Warning" ? Severity::kWarning : Severity::kError;
  d.file = require_string(j, "file");
  d.message = require_string(j, "message");
  if (j.contains("line") && !j["line"].is_null()) d.line = j["line"].get<int>();
  return d;
}

CompileResult compile_result_from_json(const nlohmann::json& j) {
  CompileResult r;
  r.status = ParseCompileStatus(require_string(j, "status"));
  r.raw_output = require_string(j, "raw_output");
  if (j.contains("diagnostics")) {
    for (const auto& d : j["diagnostics"]) r.diagnostics.push_back(diagnostic_from_json(d));
  }
  return r;
}

// ---- ProcessToolchain ----

struct ProcessToolchain::WorkDir {
  std::filesystem::path path;
  bool keep = false;

  WorkDir(const std::filesystem::path& root, bool keep_artifacts) : keep(keep_artifacts) {
    std::filesystem::path base = root.empty() ? std::filesystem::temp_directory_path() : root;
    std::filesystem::create_directories(base);
    std::string templ = (base / "rtlrefine-XXXXXX").string();
    if (mkdtemp(templ.data()) == nullptr) {
      throw IoError("cannot create a working directory under '" + base.string() + "'");
    }
    path = templ;
  }
  ~WorkDir() {
    if (keep) return;
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  WorkDir(const WorkDir&) = delete;
  WorkDir& operator=(const WorkDir&) = delete;
};

ProcessToolchain::ProcessToolchain(ToolchainConfig cfg)
    : cfg_(std::move(cfg)),
      failure_re_(CompileFailurePattern(cfg_.failure_pattern)),
      slots_(cfg_.max_concurrent > 0 ? cfg_.max_concurrent
                                     : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))) {
  cfg_.validate();
}

CompileResult ProcessToolchain::compile_in(const WorkDir& dir, const std::vector<std::string>& sources) {
  std::string src;
  for (const auto& s : sources) {
    if (!src.empty()) src += ' ';
    src += shell_quote(s);
  }
  std::string command = ReplaceOnce(cfg_.compile_command, "{src}", src);
  command = ReplaceOnce(command, "{out}", shell_quote(kBinaryFile));
  CompileResult r = classify_compile(
      run_shell(command, dir.path, std::chrono::seconds(cfg_.compile_timeout_s)));
  if (dir.keep) r.artifacts_dir = dir.path;
  return r;
}

CompileResult ProcessToolchain::compile(const SourceText& code,
                                        const std::vector<SourceText>& extra_sources) {
  SemaphoreGuard guard(slots_);
  try {
    WorkDir dir(cfg_.temp_root, cfg_.keep_artifacts);
    std::vector<std::string> names{std::string(kDesignFile)};
    WriteSource(dir.path / kDesignFile, code.content);
    for (std::size_t i = 0; i < extra_sources.size(); ++i) {
      names.push_back("extra_" + std::to_string(i) + ".v");
      WriteSource(dir.path / names.back(), extra_sources[i].content);
    }
    return compile_in(dir, names);
  } catch (const std::exception& e) {
    CompileResult r;
    r.status = CompileStatus::kToolError;
    r.raw_output = e.what();
    r.diagnostics = parse_diagnostics(r.raw_output);
    return r;
  }
}

TestbenchResult ProcessToolchain::run_testbench(const SourceText& code, const SourceText& testbench) {
  SemaphoreGuard guard(slots_);
  TestbenchResult result;
  try {
    WorkDir dir(cfg_.temp_root, cfg_.keep_artifacts);
    WriteSource(dir.path / kDesignFile, code.content);
    WriteSource(dir.path / kTestbenchFile, testbench.content);
    result.compile = compile_in(dir, {std::string(kDesignFile), std::string(kTestbenchFile)});
    if (result.compile.status != CompileStatus::kPass) return result;
    const std::string command =
        ReplaceOnce(cfg_.simulate_command, "{bin}", shell_quote(kBinaryFile));
    result.sim = classify_simulation(
        run_shell(command, dir.path, std::chrono::seconds(cfg_.simulate_timeout_s)), failure_re_);
  } catch (const std::exception& e) {
    result.compile.status = CompileStatus::kToolError;
    result.compile.raw_output = e.what();
    result.compile.diagnostics = parse_diagnostics(result.compile.raw_output);
    result.sim.reset();
  }
  return result;
}

// ---- MockToolchain ----

namespace {

MockToolchain::Outcome OutcomeFromJson(const nlohmann::json& j) {
  reject_unknown_keys(j, {"exit_code", "output", "timeout", "spawn_error"}, "mock outcome");
  MockToolchain::Outcome o;
  o.exit_code = j.value("exit_code", 0);
  o.output = j.value("output", std::string());
  o.timeout = j.value("timeout", false);
  o.spawn_error = j.value("spawn_error", false);
  return o;
}

}  // namespace

MockToolchain::MockToolchain() : MockToolchain(ToolchainConfig{}) {}

MockToolchain::MockToolchain(ToolchainConfig cfg)
    : MockToolchain(std::move(cfg), {}, Outcome{}, Outcome{}) {}

MockToolchain::MockToolchain(ToolchainConfig cfg, std::vector<Rule> rules, Outcome default_compile,
                             Outcome default_simulate)
    : cfg_(std::move(cfg)),
      rules_(std::move(rules)),
      default_compile_(std::move(default_compile)),
      default_simulate_(std::move(default_simulate)),
      failure_re_(CompileFailurePattern(cfg_.failure_pattern)) {}

std::shared_ptr<MockToolchain> MockToolchain::from_json(const nlohmann::json& j, ToolchainConfig cfg) {
  reject_unknown_keys(j, {"rules", "default"}, "mock toolchain");
  std::vector<Rule> rules;
  for (const auto& r : j.value("rules", nlohmann::json::array())) {
    reject_unknown_keys(r, {"contains", "testbench_contains", "compile", "simulate"}, "mock rule");
    Rule rule;
    rule.contains = r.value("contains", std::string());
    rule.testbench_contains = r.value("testbench_contains", std::string());
    if (r.contains("compile")) rule.compile = OutcomeFromJson(r.at("compile"));
    if (r.contains("simulate")) rule.simulate = OutcomeFromJson(r.at("simulate"));
    rules.push_back(std::move(rule));
  }
  Outcome dc;
  Outcome ds;
  if (j.contains("default")) {
    const auto& d = j.at("default");
    reject_unknown_keys(d, {"compile", "simulate"}, "mock default");
    if (d.contains("compile")) dc = OutcomeFromJson(d.at("compile"));
    if (d.contains("simulate")) ds = OutcomeFromJson(d.at("simulate"));
  }
  return std::make_shared<MockToolchain>(std::move(cfg), std::move(rules), dc, ds);
}

std::shared_ptr<MockToolchain> MockToolchain::from_file(const std::filesystem::path& path,
                                                        ToolchainConfig cfg) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)), std::move(cfg));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

const MockToolchain::Rule* MockToolchain::match(std::string_view code, std::string_view testbench) const {
  for (const Rule& r : rules_) {
    if (code.find(r.contains) == std::string_view::npos) continue;
    if (!r.testbench_contains.empty() && testbench.find(r.testbench_contains) == std::string_view::npos) {
      continue;
    }
    return &r;
  }
  return nullptr;
}

ProcessOutcome MockToolchain::to_outcome(const Outcome& o) {
  ProcessOutcome p;
  p.exit_code = o.exit_code;
  p.output = o.output;
  p.timed_out = o.timeout;
  p.spawn_failed = o.spawn_error;
  return p;
}

CompileResult MockToolchain::compile(const SourceText& code, const std::vector<SourceText>&) {
  ++compile_calls_;
  const Rule* r = match(code.content, "");
  return classify_compile(to_outcome(r && r->compile ? *r->compile : default_compile_));
}

TestbenchResult MockToolchain::run_testbench(const SourceText& code, const SourceText& testbench) {
  ++compile_calls_;
  const Rule* r = match(code.content, testbench.content);
  TestbenchResult result;
  result.compile = classify_compile(to_outcome(r && r->compile ? *r->compile : default_compile_));
  if (result.compile.status != CompileStatus::kPass) return result;
  ++simulate_calls_;
  result.sim = classify_simulation(to_outcome(r && r->simulate ? *r->simulate : default_simulate_),
                                   failure_re_);
  return result;
}

}  // namespace rtlrefine
