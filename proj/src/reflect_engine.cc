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


#include "rtlrefine/reflect_engine.h"

#include <stdexcept>
#include <utility>

#include "rtlrefine/digest.h"
#include "rtlrefine/jsonl.h"
#include "rtlrefine/worker_pool.h"

namespace rtlrefine {

std::string_view ReflectionStatusName(ReflectionStatus s) {
  switch (s) {
    case ReflectionStatus::kPass: return "Pass";
    case ReflectionStatus::kExhaustedFail: return "ExhaustedFail";
    case ReflectionStatus::kGenError: return "GenError";
  }
  return "?";
}

ReflectionStatus ParseReflectionStatus(std::string_view name) {
  for (auto s : {ReflectionStatus::kPass, ReflectionStatus::kExhaustedFail, ReflectionStatus::kGenError}) {
    if (ReflectionStatusName(s) == name) return s;
  }
  throw std::invalid_argument("unknown reflection status '" + std::string(name) + "'");
}

void ReflectionConfig::validate() const {
  if (gen.role != EndpointRole::kGen) {
    throw std::invalid_argument("generation endpoint '" + gen.id + "' must have role Gen");
  }
  if (fix.role != EndpointRole::kFix) {
    throw std::invalid_argument("fix endpoint '" + fix.id + "' must have role Fix");
  }
  if (max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
  params_gen.validate();
  params_fix.validate();
}

ReflectionTrace generate_and_fix(const std::string& instruction, const ReflectionConfig& cfg,
                                 LlmGateway& gateway, Toolchain& toolchain,
                                 std::optional<std::int64_t> seed) {
  CompletionParams pgen = cfg.params_gen;
  CompletionParams pfix = cfg.params_fix;
  if (seed) pgen.seed = pfix.seed = seed;

  ReflectionTrace trace;
  trace.instruction = instruction;
  const Prompt gen_prompt = render_generation_prompt(instruction);
  std::string code;
  try {
    code = extract_code_block(gateway.complete(cfg.gen, gen_prompt, pgen).text);
  } catch (const BackendError& e) {
    trace.error = e.what();
    return trace;
  } catch (const NoCodeFoundError& e) {
    trace.error = std::string("NoCodeFound: ") + e.what();
    return trace;
  }

  std::string digest = gen_prompt.inputs_digest;
  for (int round = 0;; ++round) {
    CompileResult result = toolchain.compile(SourceText{code, "generated"}, {});
    trace.iterations.push_back(ReflectionIteration{code, std::move(result), digest, ""});
    ReflectionIteration& it = trace.iterations.back();
    if (it.compile.status == CompileStatus::kPass) {
      trace.final_status = ReflectionStatus::kPass;
      return trace;
    }
    trace.final_status = ReflectionStatus::kExhaustedFail;
    if (it.compile.status != CompileStatus::kSyntaxError) {
      it.note = "compile " + std::string(CompileStatusName(it.compile.status));
      return trace;
    }
    if (round >= cfg.max_iterations) return trace;
    try {
      const Prompt debug = render_debug_prompt(instruction, code, it.compile.raw_output);
      std::string next = extract_code_block(gateway.complete(cfg.fix, debug, pfix).text);
      digest = debug.inputs_digest;
      code = std::move(next);
    } catch (const BackendError& e) {
      it.note = std::string("fix failed: ") + e.what();
      return trace;
    } catch (const NoCodeFoundError& e) {
      it.note = std::string("fix failed: NoCodeFound: ") + e.what();
      return trace;
    } catch (const PreconditionError& e) {
      it.note = std::string("fix failed: ") + e.what();
      return trace;
    }
  }
}

std::vector<InstructionTraces> batch_generate(const std::vector<Instruction>& instructions,
                                              const ReflectionConfig& cfg, int samples_per_instruction,
                                              LlmGateway& gateway, Toolchain& toolchain,
                                              const BatchOptions& options) {
  if (samples_per_instruction < 1) throw std::invalid_argument("samples per instruction must be >= 1");
  ReflectionConfig effective = cfg;
  if (!options.reflect) effective.max_iterations = 0;
  effective.validate();

  const auto n = static_cast<std::size_t>(samples_per_instruction);
  std::vector<InstructionTraces> out(instructions.size());
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    out[i].instruction = instructions[i];
    out[i].traces.reserve(n);
  }
  run_ordered<ReflectionTrace>(
      instructions.size() * n, options.jobs,
      [&](std::size_t job) {
        std::optional<std::int64_t> seed;
        if (options.base_seed) seed = *options.base_seed + static_cast<std::int64_t>(job % n);
        return generate_and_fix(instructions[job / n].text, effective, gateway, toolchain, seed);
      },
      [&](std::size_t job, ReflectionTrace& t) { out[job / n].traces.push_back(std::move(t)); },
      options.stop);
  return out;
}

nlohmann::json to_json(const ReflectionTrace& t) {
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& it : t.iterations) {
    nlohmann::json j = {{"code", it.code}, {"compile", to_json(it.compile)}, {"prompt_digest", it.prompt_digest}};
    if (!it.note.empty()) j["note"] = it.note;
    iters.push_back(std::move(j));
  }
  nlohmann::json j = {{"instruction", t.instruction},
                      {"final_status", std::string(ReflectionStatusName(t.final_status))},
                      {"iterations", std::move(iters)}};
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

ReflectionTrace trace_from_json(const nlohmann::json& j) {
  ReflectionTrace t;
  t.instruction = require_string(j, "instruction");
  t.final_status = ParseReflectionStatus(require_string(j, "final_status"));
  t.error = optional_string(j, "error").value_or("");
  if (!j.contains("iterations") || !j["iterations"].is_array()) {
    throw SchemaError("trace is missing the \"iterations\" array");
  }
  for (const auto& it : j["iterations"]) {
    if (!it.contains("compile")) throw SchemaError("trace iteration is missing \"compile\"");
    t.iterations.push_back(ReflectionIteration{require_string(it, "code"), compile_result_from_json(it["compile"]),
                                               require_string(it, "prompt_digest"),
                                               optional_string(it, "note").value_or("")});
  }
  return t;
}

nlohmann::json to_json(const InstructionTraces& t) {
  nlohmann::json traces = nlohmann::json::array();
  for (const auto& tr : t.traces) traces.push_back(to_json(tr));
  return {{"id", t.instruction.id}, {"instruction", t.instruction.text}, {"traces", std::move(traces)}};
}

InstructionTraces instruction_traces_from_json(const nlohmann::json& j) {
  InstructionTraces t;
  t.instruction.id = require_string(j, "id");
  t.instruction.text = require_string(j, "instruction");
  if (!j.contains("traces") || !j["traces"].is_array()) throw SchemaError("missing \"traces\" array");
  for (const auto& tr : j["traces"]) t.traces.push_back(trace_from_json(tr));
  return t;
}

std::vector<nlohmann::json> trace_log_lines(const InstructionTraces& t) {
  std::vector<nlohmann::json> lines;
  for (std::size_t s = 0; s < t.traces.size(); ++s) {
    const auto& iters = t.traces[s].iterations;
    for (std::size_t k = 0; k < iters.size(); ++k) {
      lines.push_back({{"instruction_id", t.instruction.id},
                       {"sample_idx", s},
                       {"iter", k + 1},
                       {"code", iters[k].code},
                       {"compile_status", std::string(CompileStatusName(iters[k].compile.status))},
                       {"raw_output_digest", sha256_hex(iters[k].compile.raw_output)}});
    }
  }
  return lines;
}

}  // namespace rtlrefine
