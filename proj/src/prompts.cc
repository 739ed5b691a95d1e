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

#include "rtlrefine/prompts.h"

#include <cctype>
#include <optional>
#include <vector>

#include "rtlrefine/digest.h"

namespace rtlrefine {
namespace {

constexpr std::string_view kDescriptionHead =
    "Explain the high-level functionality of the Verilog module.\n"
    "Task:\n"
    "Please analyze it and provide a detailed description of its signals and functionality. "
    "Use as many high-level concepts that are directly applicable to describe the code, "
    "but do not include extraneous details that aren't immediately applicable.\n"
    "\n"
    "Speak concisely as if this was a specification for a circuit designer to implement. "
    "You should only reply with descriptive natural language and not use any code.\n"
    "Code:\n";
constexpr std::string_view kDescriptionTail = "\nResponse:\n";

constexpr std::string_view kDebugHead =
    "As a professional Verilog designer, you are tasked with debugging a Verilog module that "
    "has some errors. Below are the details of the assignment, the original Verilog code with "
    "some syntax and functional errors, and the error messages produced by the compiler. "
    "Please review this information and provide a corrected version of the code.\n"
    "Task:\n";
constexpr std::string_view kDebugCode = "\nOriginal Code:\n";
constexpr std::string_view kDebugError = "\nCompiler Error Message:\n";
constexpr std::string_view kDebugTail = "\n";

constexpr std::string_view kGenerationHead =
    "As a professional Verilog designer, write one complete Verilog module that implements "
    "the following description. Keep the module name and ports exactly as described. Reply "
    "with the code only, inside a single ```verilog fenced block.\n"
    "Description:\n";
constexpr std::string_view kGenerationTail = "\nResponse:\n";

bool IsBlank(std::string_view s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string Concat(std::initializer_list<std::string_view> parts) {
  std::string out;
  std::size_t size = 0;
  for (auto p : parts) size += p.size();
  out.reserve(size);
  for (auto p : parts) out += p;
  return out;
}

bool IsWordChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

struct Word {
  std::size_t begin;
  std::size_t end;
};

// Identifier-like words of `text` outside // and /* */ comments.
std::vector<Word> ScanWords(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      const std::size_t close = text.find("*/", i + 2);
      i = close == std::string_view::npos ? text.size() : close + 2;
    } else if (IsWordChar(c)) {
      const std::size_t begin = i;
      while (i < text.size() && IsWordChar(text[i])) ++i;
      words.push_back({begin, i});
    } else {
      ++i;
    }
  }
  return words;
}

std::size_t SkipSpace(std::string_view text, std::size_t pos) {
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  return pos;
}

// `module <name>` followed by `(`, `#` or `;` rather than prose.
bool IsModuleHeader(std::string_view text, const std::vector<Word>& words, std::size_t w) {
  if (text.substr(words[w].begin, words[w].end - words[w].begin) != "module") return false;
  if (w + 1 >= words.size()) return false;
  const Word& name = words[w + 1];
  if (SkipSpace(text, words[w].end) != name.begin || name.begin == words[w].end) return false;
  if (std::isdigit(static_cast<unsigned char>(text[name.begin]))) return false;
  const std::size_t after = SkipSpace(text, name.end);
  return after < text.size() && (text[after] == '(' || text[after] == '#' || text[after] == ';');
}

bool IsEndModule(std::string_view text, const Word& w) {
  return text.substr(w.begin, w.end - w.begin) == "endmodule";
}

std::size_t LineStart(std::string_view text, std::size_t pos) {
  while (pos > 0 && text[pos - 1] != '\n') --pos;
  return pos;
}

// Pulls the span start back over directive (`) and comment lines sitting
// directly above the first module.
std::size_t ExtendBackward(std::string_view text, std::size_t module_pos) {
  std::size_t line_start = LineStart(text, module_pos);
  if (!IsBlank(text.substr(line_start, module_pos - line_start))) return module_pos;
  std::size_t start = line_start;
  while (start > 0) {
    const std::size_t prev_start = LineStart(text, start - 1);
    std::string_view prev = text.substr(prev_start, start - prev_start);
    const std::size_t first = prev.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) break;
    const std::string_view body = prev.substr(first);
    if (body.starts_with("`") || body.starts_with("//")) {
      start = prev_start;
    } else {
      break;
    }
  }
  return start;
}

std::optional<std::string> ModuleSpan(std::string_view text) {
  const std::vector<Word> words = ScanWords(text);
  std::size_t first = words.size();
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (IsModuleHeader(text, words, w)) {
      first = w;
      break;
    }
  }
  if (first == words.size()) return std::nullopt;

  int depth = 0;
  std::optional<std::size_t> end;
  for (std::size_t w = first; w < words.size(); ++w) {
    if (IsModuleHeader(text, words, w)) {
      ++depth;
    } else if (IsEndModule(text, words[w]) && depth > 0) {
      if (--depth > 0) continue;
      std::size_t stop = words[w].end;
      // Optional `endmodule : name` label.
      const std::size_t colon = SkipSpace(text, stop);
      if (colon < text.size() && text[colon] == ':' && w + 1 < words.size() &&
          SkipSpace(text, colon + 1) == words[w + 1].begin) {
        stop = words[w + 1].end;
        ++w;
      }
      end = stop;
      // Continue over a directly following module.
      if (w + 1 < words.size() && SkipSpace(text, stop) == words[w + 1].begin &&
          IsModuleHeader(text, words, w + 1)) {
        continue;
      }
      break;
    }
  }
  // A truncated trailing module is dropped; the ones that closed are kept.
  if (!end) return std::nullopt;
  const std::size_t start = ExtendBackward(text, words[first].begin);
  return std::string(text.substr(start, *end - start));
}

std::string TrimBlockContents(std::string_view s) {
  std::size_t b = 0;
  // Leading blank lines only; first-line indentation is kept.
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\n') {
      b = i + 1;
    } else if (!std::isspace(static_cast<unsigned char>(s[i]))) {
      break;
    }
  }
  std::size_t e = s.size();
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<std::string> FirstFencedBlock(std::string_view text) {
  const std::size_t open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  const std::size_t line_end = text.find('\n', open + 3);
  if (line_end == std::string_view::npos) return std::nullopt;
  const std::size_t body = line_end + 1;
  std::size_t close = body;
  for (;;) {
    close = text.find("```", close);
    if (close == std::string_view::npos) {
      close = text.size();
      break;
    }
    if (close == body || text[close - 1] == '\n' ||
        IsBlank(text.substr(LineStart(text, close), close - LineStart(text, close)))) {
      break;
    }
    close += 3;
  }
  std::string contents = TrimBlockContents(text.substr(body, close - body));
  if (IsBlank(contents)) return std::nullopt;
  return contents;
}

}  // namespace

std::string_view TemplateIdName(TemplateId id) {
  switch (id) {
    case TemplateId::kDescription: return "Description";
    case TemplateId::kDebugInstruction: return "DebugInstruction";
    case TemplateId::kGeneration: return "Generation";
  }
  return "?";
}

TemplateId ParseTemplateId(std::string_view name) {
  for (TemplateId id :
       {TemplateId::kDescription, TemplateId::kDebugInstruction, TemplateId::kGeneration}) {
    if (TemplateIdName(id) == name) return id;
  }
  throw std::invalid_argument("unknown template id '" + std::string(name) + "'");
}

Prompt render_description_prompt(std::string_view code) {
  if (code.empty()) throw PreconditionError("description prompt requires nonempty code");
  return Prompt{Concat({kDescriptionHead, code, kDescriptionTail}), TemplateId::kDescription,
                fields_digest({TemplateIdName(TemplateId::kDescription), code})};
}

Prompt render_debug_prompt(std::string_view task, std::string_view original_code,
                           std::string_view error) {
  if (task.empty()) throw PreconditionError("debug prompt requires a nonempty task");
  if (original_code.empty()) throw PreconditionError("debug prompt requires nonempty code");
  if (error.empty()) throw PreconditionError("debug prompt requires a nonempty error message");
  return Prompt{
      Concat({kDebugHead, task, kDebugCode, original_code, kDebugError, error, kDebugTail}),
      TemplateId::kDebugInstruction,
      fields_digest({TemplateIdName(TemplateId::kDebugInstruction), task, original_code, error})};
}

Prompt render_generation_prompt(std::string_view description) {
  if (IsBlank(description)) {
    throw PreconditionError("generation prompt requires a non-blank description");
  }
  return Prompt{Concat({kGenerationHead, description, kGenerationTail}), TemplateId::kGeneration,
                fields_digest({TemplateIdName(TemplateId::kGeneration), kGenerationTemplateVersion,
                               description})};
}

std::string extract_code_block(std::string_view response_text) {
  if (auto fenced = FirstFencedBlock(response_text)) return *fenced;
  if (auto span = ModuleSpan(response_text)) return *span;
  throw NoCodeFoundError();
}

}  // namespace rtlrefine
