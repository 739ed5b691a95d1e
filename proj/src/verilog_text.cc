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

#include "rtlrefine/verilog_text.h"

#include <string>
#include <utility>

namespace rtlrefine {
namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool IsDigit(char c) { return c >= '0' && c <= '9'; }
bool IsAlpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool IsIdentStart(char c) { return IsAlpha(c) || c == '_' || c == '$'; }
bool IsIdentChar(char c) { return IsIdentStart(c) || IsDigit(c); }
bool IsNumberChar(char c) { return IsAlpha(c) || IsDigit(c) || c == '_' || c == '\''; }
bool IsBaseChar(char c) {
  switch (c) {
    case 's': case 'S': case 'b': case 'B': case 'o': case 'O':
    case 'd': case 'D': case 'h': case 'H': case 'x': case 'X':
    case 'z': case 'Z':
      return true;
    default:
      return IsDigit(c);
  }
}
bool IsPunctuation(char c) {
  switch (c) {
    case ';': case ',': case '(': case ')': case '[': case ']':
    case '{': case '}': case '.': case '#': case '@': case ':':
      return true;
    default:
      return false;
  }
}

std::string LexErrorMessage(LexError::Kind kind, int line) {
  const char* what = kind == LexError::Kind::kUnterminatedBlockComment
                         ? "unterminated block comment"
                         : "unterminated string literal";
  return std::string(what) + " starting at line " + std::to_string(line);
}

// Cursor over the source that keeps the current line number in sync.
class Scanner {
 public:
  explicit Scanner(std::string_view src) : src_(src) {}

  bool done() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  std::size_t pos() const { return pos_; }
  int line() const { return line_; }
  std::string_view slice(std::size_t from) const { return src_.substr(from, pos_ - from); }

  void advance() {
    if (src_[pos_] == '\n') ++line_;
    ++pos_;
  }

  // At `//`: consume up to, not including, the newline.
  void skip_line_comment() {
    while (!done() && peek() != '\n') advance();
  }

  // At `/*`: consume through the closing `*/`.
  void skip_block_comment() {
    const int start = line_;
    advance();
    advance();
    while (!done()) {
      if (peek() == '*' && peek(1) == '/') {
        advance();
        advance();
        return;
      }
      advance();
    }
    throw LexError(LexError::Kind::kUnterminatedBlockComment, start);
  }

  // At `"`: consume through the closing quote. A backslash escapes the next
  // character (including a line break); a bare line break ends the line and
  // therefore the literal.
  void skip_string() {
    const int start = line_;
    advance();
    while (!done()) {
      const char c = peek();
      if (c == '\\') {
        advance();
        if (done()) break;
        if (peek() == '\r' && peek(1) == '\n') advance();
        advance();
        continue;
      }
      if (c == '\n') break;
      advance();
      if (c == '"') return;
    }
    throw LexError(LexError::Kind::kUnterminatedString, start);
  }

  // At `\`: an escaped identifier runs to the next whitespace character.
  void skip_escaped_identifier() {
    advance();
    while (!done() && !IsSpace(peek())) advance();
  }

  void skip_while(bool (*pred)(char)) {
    while (!done() && pred(peek())) advance();
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

std::string_view TokenKindName(TokenKind kind) {
  switch (kind) {
    case TokenKind::kIdentifier: return "Identifier";
    case TokenKind::kNumber: return "Number";
    case TokenKind::kOperator: return "Operator";
    case TokenKind::kStringLiteral: return "StringLiteral";
    case TokenKind::kPunctuation: return "Punctuation";
  }
  return "?";
}

LexError::LexError(Kind kind, int line)
    : std::runtime_error(LexErrorMessage(kind, line)), kind_(kind), line_(line) {}

MalformedHeaderError::MalformedHeaderError(std::string module_name, int line)
    : std::runtime_error("module declaration '" + module_name + "' at line " +
                         std::to_string(line) + " has no terminating ';'"),
      line_(line) {}

std::string strip_comments(std::string_view src) {
  std::string out;
  out.reserve(src.size());
  Scanner s(src);
  while (!s.done()) {
    const char c = s.peek();
    const std::size_t start = s.pos();
    if (c == '/' && s.peek(1) == '/') {
      s.skip_line_comment();
      out += ' ';
    } else if (c == '/' && s.peek(1) == '*') {
      s.skip_block_comment();
      out += ' ';
    } else if (c == '"') {
      s.skip_string();
      out += s.slice(start);
    } else if (c == '\\') {
      s.skip_escaped_identifier();
      out += s.slice(start);
    } else {
      s.advance();
      out += c;
    }
  }
  return out;
}

SourceText strip_comments(const SourceText& src) {
  return SourceText{strip_comments(src.content), src.origin};
}

std::vector<LexToken> tokenize(std::string_view src) {
  std::vector<LexToken> tokens;
  Scanner s(src);
  auto emit = [&](TokenKind kind, std::size_t start, int line) {
    tokens.push_back(LexToken{kind, std::string(s.slice(start)), line});
  };
  while (!s.done()) {
    const char c = s.peek();
    const std::size_t start = s.pos();
    const int line = s.line();
    if (IsSpace(c)) {
      s.advance();
    } else if (c == '/' && s.peek(1) == '/') {
      s.skip_line_comment();
    } else if (c == '/' && s.peek(1) == '*') {
      s.skip_block_comment();
    } else if (c == '"') {
      s.skip_string();
      emit(TokenKind::kStringLiteral, start, line);
    } else if (c == '\\') {
      s.skip_escaped_identifier();
      emit(TokenKind::kIdentifier, start, line);
    } else if (IsIdentStart(c)) {
      s.skip_while(IsIdentChar);
      emit(TokenKind::kIdentifier, start, line);
    } else if (IsDigit(c) || (c == '\'' && IsBaseChar(s.peek(1)))) {
      s.advance();
      while (!s.done()) {
        if (IsNumberChar(s.peek())) {
          s.advance();
        } else if (s.peek() == '.' && IsDigit(s.peek(1))) {
          s.advance();
        } else {
          break;
        }
      }
      emit(TokenKind::kNumber, start, line);
    } else if (IsPunctuation(c)) {
      s.advance();
      emit(TokenKind::kPunctuation, start, line);
    } else {
      s.advance();
      // Keep a multi-byte UTF-8 sequence together.
      if (static_cast<unsigned char>(c) >= 0xC0) {
        while (!s.done() && (static_cast<unsigned char>(s.peek()) & 0xC0) == 0x80) s.advance();
      }
      emit(TokenKind::kOperator, start, line);
    }
  }
  return tokens;
}

std::int64_t count_lines(std::string_view text) {
  if (text.empty()) return 0;
  std::int64_t lines = 0;
  for (char c : text) lines += (c == '\n');
  if (text.back() != '\n') ++lines;
  return lines;
}

LexStats lex_stats(std::string_view src) {
  const std::string stripped = strip_comments(src);
  LexStats stats;
  stats.line_count = count_lines(stripped);
  stats.token_count = static_cast<std::int64_t>(tokenize(stripped).size());
  return stats;
}

KeywordReport detect_required_keywords(const std::vector<LexToken>& tokens) {
  bool has_module = false;
  bool has_endmodule = false;
  KeywordReport report;
  for (const LexToken& tok : tokens) {
    if (tok.kind != TokenKind::kIdentifier) continue;
    const std::string_view t = tok.text;
    if (t == "module") has_module = true;
    if (t == "endmodule") has_endmodule = true;
    if (t == "assign" || t == "always" || t.starts_with("always_")) report.has_procedural = true;
  }
  report.has_module_pair = has_module && has_endmodule;
  return report;
}

std::vector<ModuleHeader> extract_module_headers(const std::vector<LexToken>& tokens) {
  std::vector<ModuleHeader> headers;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const LexToken& tok = tokens[i];
    if (tok.kind != TokenKind::kIdentifier || tok.text != "module") {
      ++i;
      continue;
    }
    ModuleHeader header;
    int depth = 0;
    bool terminated = false;
    std::size_t j = i;
    for (; j < tokens.size(); ++j) {
      const LexToken& t = tokens[j];
      header.header_tokens.push_back(t.text);
      if (j > i && header.name.empty() && t.kind == TokenKind::kIdentifier) header.name = t.text;
      if (t.kind != TokenKind::kPunctuation) continue;
      if (t.text == "(") {
        ++depth;
      } else if (t.text == ")") {
        if (depth > 0) --depth;
      } else if (t.text == ";" && depth == 0) {
        terminated = true;
        break;
      }
    }
    if (!terminated) throw MalformedHeaderError(header.name, tok.line);
    headers.push_back(std::move(header));
    i = j + 1;
  }
  return headers;
}

bool headers_equal(const std::vector<ModuleHeader>& a, const std::vector<ModuleHeader>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].header_tokens != b[i].header_tokens) return false;
  }
  return true;
}

std::vector<ModuleHeader> module_headers_of(std::string_view src) {
  return extract_module_headers(tokenize(src));
}

}  // namespace rtlrefine
