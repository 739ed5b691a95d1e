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

// Generate-then-repair at inference time. The Gen endpoint writes code for an
// instruction; while the compiler rejects it with a syntax error, the Fix
// endpoint gets the code plus the raw compiler output and tries again.

#ifndef RTLREFINE_REFLECT_ENGINE_H_
#define RTLREFINE_REFLECT_ENGINE_H_

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rtlrefine/compile_harness.h"
#include "rtlrefine/llm_gateway.h"

namespace rtlrefine {

struct ReflectionConfig {
  BackendEndpoint gen;
  BackendEndpoint fix;
  int max_iterations = 3;  // fix rounds after the initial generation
  CompletionParams params_gen;
  CompletionParams params_fix;

  // Throws std::invalid_argument.
  void validate() const;
};

struct ReflectionIteration {
  std::string code;
  CompileResult compile;
  std::string prompt_digest;
  std::string note;  // set when the loop ended here for a non-compile reason
};

enum class ReflectionStatus { kPass, kExhaustedFail, kGenError };

std::string_view ReflectionStatusName(ReflectionStatus s);
ReflectionStatus ParseReflectionStatus(std::string_view name);

struct ReflectionTrace {
  std::string instruction;
  std::vector<ReflectionIteration> iterations;
  ReflectionStatus final_status = ReflectionStatus::kGenError;
  std::string error;  // why generation failed, for kGenError

  const ReflectionIteration* last() const { return iterations.empty() ? nullptr : &iterations.back(); }
};

// `seed`, when given, overrides the seed of both parameter sets.
// Throws PreconditionError for an empty instruction.
ReflectionTrace generate_and_fix(const std::string& instruction, const ReflectionConfig& cfg,
                                 LlmGateway& gateway, Toolchain& toolchain,
                                 std::optional<std::int64_t> seed = std::nullopt);

struct Instruction {
  std::string id;
  std::string text;
};

struct InstructionTraces {
  Instruction instruction;
  std::vector<ReflectionTrace> traces;
};

struct BatchOptions {
  int jobs = 1;
  bool reflect = true;  // false forces max_iterations to 0
  // Sample s of instruction i uses seed base_seed + s when set.
  std::optional<std::int64_t> base_seed;
  const std::atomic<bool>* stop = nullptr;
};

// Exactly samples_per_instruction traces per instruction, in input order.
// Throws std::invalid_argument when samples_per_instruction < 1.
std::vector<InstructionTraces> batch_generate(const std::vector<Instruction>& instructions,
                                              const ReflectionConfig& cfg, int samples_per_instruction,
                                              LlmGateway& gateway, Toolchain& toolchain,
                                              const BatchOptions& options = {});

nlohmann::json to_json(const ReflectionTrace& t);
ReflectionTrace trace_from_json(const nlohmann::json& j);

// One object per line: {"id", "instruction", "traces": [...]}.
nlohmann::json to_json(const InstructionTraces& t);
InstructionTraces instruction_traces_from_json(const nlohmann::json& j);

// Flat per-iteration log lines:
// {instruction_id, sample_idx, iter, code, compile_status, raw_output_digest}.
std::vector<nlohmann::json> trace_log_lines(const InstructionTraces& t);

}  // namespace rtlrefine

#endif  // RTLREFINE_REFLECT_ENGINE_H_
