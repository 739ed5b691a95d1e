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

// Prompt templates sent to the model backends, and recovery of Verilog code
// from free-form model replies.
//
// The description and debug templates are fixed transcriptions; any change to
// their bytes changes every inputs_digest and invalidates recorded mocks. The
// generation template is ours and carries a version string.

#ifndef RTLREFINE_PROMPTS_H_
#define RTLREFINE_PROMPTS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace rtlrefine {

enum class TemplateId { kDescription, kDebugInstruction, kGeneration };

std::string_view TemplateIdName(TemplateId id);
// Throws std::invalid_argument for an unknown name.
TemplateId ParseTemplateId(std::string_view name);

struct Prompt {
  std::string text;
  TemplateId template_id;
  std::string inputs_digest;  // over the substituted fields, not the text
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoCodeFoundError : public std::runtime_error {
 public:
  NoCodeFoundError() : std::runtime_error("response contains no Verilog code") {}
};

inline constexpr std::string_view kGenerationTemplateVersion = "generation-v1";

// Throws PreconditionError when code is empty.
Prompt render_description_prompt(std::string_view code);

// Throws PreconditionError when any input is empty.
Prompt render_debug_prompt(std::string_view task, std::string_view original_code,
                           std::string_view error);

// Throws PreconditionError when the description is empty or only whitespace.
Prompt render_generation_prompt(std::string_view description);

// The first fenced block's contents when the reply has a ``` fence, otherwise
// the source from the first `module` through its matching `endmodule`
// (extended over directly following modules and back over directive/comment
// lines directly above it). Throws NoCodeFoundError.
std::string extract_code_block(std::string_view response_text);

}  // namespace rtlrefine

#endif  // RTLREFINE_PROMPTS_H_
