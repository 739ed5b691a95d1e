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

// Lexical analysis of Verilog source text. Everything here is a pure
// function of its input; no I/O, no global state.
//
// The tokenizer is deliberately simple and deterministic: identifiers and
// numbers are maximal runs, every other non-whitespace character is its own
// token, and a string literal is one token. It is not a full Verilog lexer
// (no multi-character operators, no preprocessor), but it is stable enough to
// count tokens, spot keywords and compare module declarations.

#ifndef RTLREFINE_VERILOG_TEXT_H_
#define RTLREFINE_VERILOG_TEXT_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rtlrefine {

struct SourceText {
  std::string content;
  std::string origin;

  bool operator==(const SourceText&) const = default;
};

enum class TokenKind { kIdentifier, kNumber, kOperator, kStringLiteral, kPunctuation };

std::string_view TokenKindName(TokenKind kind);

struct LexToken {
  TokenKind kind;
  std::string text;
  int line;  // 1-based

  bool operator==(const LexToken&) const = default;
};

// Raised by strip_comments / tokenize on input that cannot be lexed.
class LexError : public std::runtime_error {
 public:
  enum class Kind { kUnterminatedBlockComment, kUnterminatedString };

  LexError(Kind kind, int line);

  Kind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  Kind kind_;
  int line_;
};

class MalformedHeaderError : public std::runtime_error {
 public:
  MalformedHeaderError(std::string module_name, int line);

  int line() const { return line_; }

 private:
  int line_;
};

// Line and token quantities for the size filters. The density is kept as the
// pair (token_count, line_count) so threshold checks stay in integers.
struct LexStats {
  std::int64_t line_count = 0;
  std::int64_t token_count = 0;

  double avg_tokens_per_line() const {
    return line_count == 0 ? 0.0 : static_cast<double>(token_count) / line_count;
  }
  // token_count / line_count > max_avg, evaluated without division.
  bool density_exceeds(std::int64_t max_avg) const {
    return token_count > max_avg * line_count;
  }

  bool operator==(const LexStats&) const = default;
};

struct KeywordReport {
  bool has_module_pair = false;
  bool has_procedural = false;

  bool operator==(const KeywordReport&) const = default;
};

struct ModuleHeader {
  std::string name;
  // Token texts from `module` through the terminating `;`, inclusive.
  std::vector<std::string> header_tokens;

  bool operator==(const ModuleHeader&) const = default;
};

// Replaces every `//` line comment and `/* */` block comment by one space.
// String literals and escaped identifiers pass through untouched. Throws
// LexError.
std::string strip_comments(std::string_view src);
SourceText strip_comments(const SourceText& src);

// Comments, if any remain, are skipped like whitespace. Throws LexError.
std::vector<LexToken> tokenize(std::string_view src);

// Number of physical lines: LF-terminated lines plus a final unterminated
// one. CRLF counts once. Empty input has zero lines.
std::int64_t count_lines(std::string_view text);

// Stats of the comment-stripped text. Throws LexError.
LexStats lex_stats(std::string_view src);

KeywordReport detect_required_keywords(const std::vector<LexToken>& tokens);

// Throws MalformedHeaderError when a declaration has no terminating `;`.
std::vector<ModuleHeader> extract_module_headers(const std::vector<LexToken>& tokens);

bool headers_equal(const std::vector<ModuleHeader>& a, const std::vector<ModuleHeader>& b);

// Tokenize + extract in one step.
std::vector<ModuleHeader> module_headers_of(std::string_view src);

}  // namespace rtlrefine

#endif  // RTLREFINE_VERILOG_TEXT_H_
