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


// pass@k scoring and the generation / repair benchmark runners.

#ifndef RTLREFINE_EVALUATOR_H_
#define RTLREFINE_EVALUATOR_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rtlrefine/compile_harness.h"
#include "rtlrefine/llm_gateway.h"
#include "rtlrefine/reflect_engine.h"

namespace rtlrefine {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class MissingTracesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(const std::string& what, std::vector<std::string> ids);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

// Probability that a uniformly drawn k-subset of n samples, c of them
// passing, contains at least one passing sample. Throws DomainError unless
// 1 <= k <= n and 0 <= c <= n.
double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k);

struct EvalCounts {
  std::int64_t n = 0;
  std::int64_t c_syntax = 0;
  std::int64_t c_func = 0;
};

struct GenTask {
  std::string id;
  std::string instruction;
  SourceText testbench;
  std::optional<SourceText> reference;
};

struct FixCase {
  std::string id;
  std::string instruction;
  SourceText erroneous_code;
  std::string error_message;
  SourceText testbench;
};

struct TaskCounts {
  std::string id;
  EvalCounts counts;
};

struct FixOutcome {
  std::string id;
  bool syntactic = false;
  bool functional = false;
  std::string corrected_code;
  std::string note;
};

struct EvalReport {
  std::vector<int> ks;
  std::vector<TaskCounts> tasks;          // sorted by id
  std::map<int, double> pass_at_k;        // over c_func
  std::map<int, double> syntax_pass_at_k; // over c_syntax
  std::vector<FixOutcome> fix_cases;      // sorted by id
  std::optional<double> syntactic_rate;   // percent; absent without cases
  std::optional<double> functional_rate;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// `traces` must hold exactly n traces for every task (matched on id); n is
// taken from the traces. Throws MissingTracesError and DomainError.
EvalReport evaluate_generation(const std::vector<GenTask>& tasks, const std::vector<InstructionTraces>& traces,
                               const std::vector<int>& ks, Toolchain& toolchain, int jobs = 1);

struct FixerConfig {
  BackendEndpoint fixer;
  CompletionParams params;
};

// A single repair attempt per case.
FixOutcome fix_once(const FixCase& c, const FixerConfig& cfg, LlmGateway& gateway, Toolchain& toolchain);

EvalReport evaluate_fix(const std::vector<FixCase>& cases, const FixerConfig& cfg, LlmGateway& gateway,
                        Toolchain& toolchain, int jobs = 1);

// JSONL {"id","instruction","erroneous_code","error_message","testbench"}.
// With a toolchain, every erroneous_code must fail to compile. Throws
// SchemaError (with line), IoError and InvariantViolation.
std::vector<FixCase> load_fix_benchmark(const std::filesystem::path& path, Toolchain* toolchain = nullptr,
                                        int jobs = 1);

// JSONL {"id","instruction","testbench","reference"?}. With a toolchain,
// each reference must compile together with its testbench.
std::vector<GenTask> load_gen_benchmark(const std::filesystem::path& path, Toolchain* toolchain = nullptr,
                                        int jobs = 1);

}  // namespace rtlrefine

#endif  // RTLREFINE_EVALUATOR_H_
