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


#include "fixtures.h"

#include <stdlib.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rtlrefine/jsonl.h"
#include "rtlrefine/prompts.h"

namespace rtlrefine::testing {

TempDir::TempDir() {
  std::string templ = (std::filesystem::temp_directory_path() / "rtlrefine-test-XXXXXX").string();
  if (mkdtemp(templ.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = templ;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json MarkerToolchainJson() {
  return {{"rules",
           {{{"contains", kBroken}, {"compile", {{"exit_code", 1}, {"output", "design.v:2: syntax error\n"}}}},
            {{"contains", kWrong},
             {"simulate", {{"exit_code", 0}, {"output", "Mismatch at t=10: expected 1, got 0\n"}}}}}},
          {"default", {{"compile", {{"exit_code", 0}}}, {"simulate", {{"exit_code", 0}, {"output", "PASS\n"}}}}}};
}

std::shared_ptr<MockToolchain> MarkerToolchain() { return MockToolchain::from_json(MarkerToolchainJson()); }

std::string SizedModule(std::int64_t lines, std::int64_t tokens) {
  const std::int64_t body_lines = lines - 2;
  std::int64_t body_tokens = tokens - 4;  // "module m ;" and "endmodule"
  if (lines < 3 || body_tokens < 5 + (body_lines - 1)) throw std::invalid_argument("SizedModule: infeasible size");
  std::string out = "module m;\n";
  for (std::int64_t l = 0; l < body_lines; ++l) {
    // Spread the body tokens evenly; every line carries at least one.
    const std::int64_t left_lines = body_lines - l;
    std::int64_t here = body_tokens / left_lines;
    if (l == 0) here = std::max<std::int64_t>(here, 5);  // room for one assign
    body_tokens -= here;
    std::string line;
    while (here >= 5) {
      line += "assign a = b; ";
      here -= 5;
    }
    while (here-- > 0) line += "; ";
    line.pop_back();
    out += line + "\n";
  }
  out += "endmodule\n";
  return out;
}

std::vector<HeaderPair> HeaderPairs() {
  std::vector<HeaderPair> pairs;
  auto body_fix = [&](std::string label, std::string header, std::string bad_body, std::string good_body) {
    pairs.push_back({std::move(label), header + bad_body + "\nendmodule\n", header + good_body + "\nendmodule\n",
                     true});
  };
  auto header_fix = [&](std::string label, std::string bad_header, std::string good_header, std::string body) {
    pairs.push_back({std::move(label), bad_header + "  " + body + " " + kBroken + "\nendmodule\n",
                     good_header + "  " + body + ";\nendmodule\n", false});
  };
  const std::string adder = "module adder #(parameter W = 8) (\n  input [W-1:0] a,\n  input [W-1:0] b,\n  output [W:0] sum\n);\n";
  body_fix("missing semicolon", adder, std::string("  assign sum = a + b ") + kBroken, "  assign sum = a + b;");
  body_fix("wire driven in always", "module mux2(input s, input a, input b, output y);\n",
           std::string("  wire t; always @(*) t = s ? b : a; ") + kBroken + "\n  assign y = t;",
           "  wire t;\n  assign t = s ? b : a;\n  assign y = t;");
  body_fix("reg type", "module cnt(input clk, input rst, output reg [3:0] q);\n",
           std::string("  always @(posedge clk) q <= rst ? 0 : q + 1 ") + kBroken,
           "  always @(posedge clk) q <= rst ? 4'd0 : q + 4'd1;");
  body_fix("undeclared net", "module inv(input a, output y);\n", std::string("  assign y = ~z; ") + kBroken,
           "  assign y = ~a;");
  body_fix("begin end", "module dff(input clk, input d, output reg q);\n",
           std::string("  always @(posedge clk) begin q <= d; ") + kBroken,
           "  always @(posedge clk) begin\n    q <= d;\n  end");
  body_fix("comment in body only", "module buf1(input a, output y);\n",
           std::string("  // drive output\n  assign y = a ") + kBroken, "  /* fixed */ assign y = a;");
  body_fix("case statement", "module dec(input [1:0] s, output reg [3:0] y);\n",
           std::string("  always @(*) case (s) 0: y = 1; endcase ") + kBroken,
           "  always @(*) begin\n    case (s)\n      2'd0: y = 4'b0001;\n      default: y = 4'b0000;\n    endcase\n  end");
  body_fix("header whitespace differs", "module  xor2 ( input a , input b , output y ) ;\n",
           std::string("  assign y = a ^ b ") + kBroken, "  assign y = a ^ b;");
  body_fix("two modules, body fix", "module top(input a, output y);\n  leaf u(.a(a), .y(y));\nendmodule\nmodule leaf(input a, output y);\n",
           std::string("  assign y = a ") + kBroken, "  assign y = a;");
  body_fix("localparam added in body", "module sh #(parameter N = 2) (input [7:0] a, output [7:0] y);\n",
           std::string("  assign y = a << N ") + kBroken, "  localparam M = N;\n  assign y = a << M;");

  header_fix("port added", "module and2(input a, input b, output y);\n",
             "module and2(input a, input b, input c, output y);\n", "assign y = a & b");
  header_fix("port removed", "module and3(input a, input b, input c, output y);\n",
             "module and3(input a, input b, output y);\n", "assign y = a & b");
  header_fix("port renamed", "module or2(input a, input b, output y);\n",
             "module or2(input a, input b, output out);\n", "assign y = a | b");
  header_fix("parameter value changed", "module reg_w #(parameter W = 8) (input [W-1:0] d, output [W-1:0] q);\n",
             "module reg_w #(parameter W = 16) (input [W-1:0] d, output [W-1:0] q);\n", "assign q = d");
  header_fix("parameter added", "module pass(input [3:0] d, output [3:0] q);\n",
             "module pass #(parameter W = 4) (input [W-1:0] d, output [W-1:0] q);\n", "assign q = d");
  header_fix("module renamed", "module nand2(input a, input b, output y);\n",
             "module nand_gate(input a, input b, output y);\n", "assign y = ~(a & b)");
  header_fix("port width changed", "module wid(input [3:0] a, output [3:0] y);\n",
             "module wid(input [7:0] a, output [3:0] y);\n", "assign y = a[3:0]");
  header_fix("direction changed", "module dir(input a, output y);\n", "module dir(input a, inout y);\n",
             "assign y = a");
  header_fix("ports reordered", "module ord(input a, input b, output y);\n",
             "module ord(input b, input a, output y);\n", "assign y = a - b");
  header_fix("port became reg", "module rg(input a, output y);\n", "module rg(input a, output reg y);\n",
             "always @(*) y = a");
  return pairs;
}

double PassAtKByEnumeration(int n, int c, int k) {
  if (n > 20) throw std::invalid_argument("enumeration limited to n <= 20");
  const unsigned passing = (1u << c) - 1u;
  std::int64_t total = 0;
  std::int64_t hit = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    ++total;
    if (mask & passing) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

BackendEndpoint Endpoint(const std::string& id, EndpointRole role) {
  return BackendEndpoint{id, "mock://", id, "", role};
}

GatewayOptions FastGatewayOptions() {
  GatewayOptions o;
  o.retry.initial_backoff_ms = 0;
  o.retry.max_backoff_ms = 0;
  return o;
}

namespace {

std::string CaseCode(const std::string& id, const char* marker) {
  return "module " + id + "(input a, output y);\n  assign y = a" + (marker ? std::string(" ") + marker : ";") +
         "\nendmodule\n";
}

FixCase MakeCase(const std::string& id) {
  FixCase c;
  c.id = id;
  c.instruction = "Implement module " + id + " that drives y from a.";
  c.erroneous_code = SourceText{CaseCode(id, kBroken), id};
  c.error_message = "design.v:2: syntax error\n";
  c.testbench = SourceText{"module tb;\n  reg a; wire y;\n  " + id + " dut(.a(a), .y(y));\nendmodule\n", id + "/tb"};
  return c;
}

enum class FixKind { kFixed, kWrong, kStillBroken, kBackendError, kNoCode };

void ScriptFix(MockBackend& backend, const FixCase& c, FixKind kind) {
  const Prompt p = render_debug_prompt(c.instruction, c.erroneous_code.content, c.error_message);
  switch (kind) {
    case FixKind::kFixed:
      backend.script_text(p, {"Here is the fix:\n```verilog\n" + CaseCode(c.id, nullptr) + "```\n"});
      break;
    case FixKind::kWrong:
      backend.script_text(p, {"```verilog\n" + CaseCode(c.id, kWrong) + "```"});
      break;
    case FixKind::kStillBroken:
      backend.script_text(p, {CaseCode(c.id, kBroken)});
      break;
    case FixKind::kBackendError:
      backend.script(TemplateId::kDebugInstruction, p.inputs_digest,
                     {MockBackend::Step{std::nullopt, BackendError::Kind::kAuth, 0}});
      break;
    case FixKind::kNoCode:
      backend.script_text(p, {"I cannot fix this."});
      break;
  }
}

}  // namespace

FixFixture FourCaseFixFixture() {
  FixFixture f;
  f.backend = std::make_shared<MockBackend>();
  f.fixer = Endpoint("fix", EndpointRole::kFix);
  const FixKind kinds[] = {FixKind::kFixed, FixKind::kFixed, FixKind::kWrong, FixKind::kStillBroken};
  for (int i = 0; i < 4; ++i) {
    f.cases.push_back(MakeCase("case" + std::to_string(i + 1)));
    ScriptFix(*f.backend, f.cases.back(), kinds[i]);
  }
  return f;
}

FixFixture RandomFixFixture(std::mt19937_64& rng) {
  FixFixture f;
  f.backend = std::make_shared<MockBackend>();
  f.fixer = Endpoint("fix", EndpointRole::kFix);
  const int n = static_cast<int>(rng() % 9);
  for (int i = 0; i < n; ++i) {
    f.cases.push_back(MakeCase("r" + std::to_string(i)));
    ScriptFix(*f.backend, f.cases.back(), static_cast<FixKind>(rng() % 5));
  }
  return f;
}

void WriteFixBenchmark(const std::filesystem::path& path, const std::vector<FixCase>& cases) {
  std::string text;
  for (const auto& c : cases) {
    text += jsonl_line({{"id", c.id},
                        {"instruction", c.instruction},
                        {"erroneous_code", c.erroneous_code.content},
                        {"error_message", c.error_message},
                        {"testbench", c.testbench.content}});
  }
  WriteText(path, text);
}

AugmentFixture ScriptedAugmentFixture(int samples, std::int64_t base_seed) {
  AugmentFixture f;
  f.backend = std::make_shared<MockBackend>();
  for (int i = 0; i < samples; ++i) {
    const std::string name = "s" + std::to_string(i);
    const std::string good = "module " + name + "(input a, output y);\n  assign y = a;\nendmodule\n";
    const std::string bad = "module " + name + "(input a, output y);\n  assign y = a " + kBroken + "\nendmodule";
    f.corpus.push_back(FilteredSample{name, "fixture/" + name + ".v", "// original\n" + good, " \n" + good});
    const std::int64_t seed = base_seed + i;
    auto text = [](std::string t) { return MockBackend::Step{std::move(t), std::nullopt, 0}; };
    f.backend->script(TemplateId::kDescription, "*",
                      {text("Module " + name + " copies input a to output y.\n")}, seed);
    const bool first_ok = i % 3 == 0;
    f.backend->script(TemplateId::kGeneration, "*",
                      {text(first_ok ? "```verilog\n" + good + "```" : "Sure.\n" + bad + "\nHope this helps.")},
                      seed);
    f.backend->script(TemplateId::kDebugInstruction, "*",
                      {text(i % 3 == 1 ? "```verilog\n" + good + "```" : "```\n" + bad + "\n```")}, seed);
  }
  return f;
}

void WriteFilteredCorpus(const std::filesystem::path& path, const std::vector<FilteredSample>& corpus) {
  std::string text;
  for (const auto& s : corpus) text += jsonl_line(to_json(s));
  WriteText(path, text);
}

CommentedSource RandomCommentedSource(std::mt19937_64& rng) {
  static const std::string kCode =
      "abcxyz_$019 \t=+-;()[]{}<>&|^~!?:,.#@'";
  static const std::string kAny = "abc XYZ/*-=;\"'\\#";
  auto pick = [&](const std::string& alphabet) { return alphabet[rng() % alphabet.size()]; };
  auto len = [&](int max) { return static_cast<int>(rng() % static_cast<unsigned>(max + 1)); };

  CommentedSource s;
  const int pieces = 1 + len(12);
  for (int p = 0; p < pieces; ++p) {
    switch (rng() % 5) {
      case 0:
      case 1: {  // code
        std::string code;
        for (int i = len(10); i >= 0; --i) code += pick(kCode);
        s.source += code;
        s.expected_stripped += code;
        break;
      }
      case 2: {  // string literal, may hold comment markers and escapes
        std::string lit = "\"";
        for (int i = len(8); i > 0; --i) {
          const char c = pick(kAny);
          if (c == '"' || c == '\\') {
            lit += '\\';
            lit += c;
          } else {
            lit += c;
          }
        }
        lit += '"';
        s.source += lit;
        s.expected_stripped += lit;
        s.strings.push_back(lit);
        break;
      }
      case 3: {  // line comment, always newline-terminated here
        std::string body;
        for (int i = len(8); i > 0; --i) body += pick(kAny);
        s.source += "//" + body + "\n";
        s.expected_stripped += " \n";
        break;
      }
      case 4: {  // block comment, possibly multi-line
        std::string body;
        for (int i = len(10); i > 0; --i) {
          char c = rng() % 4 == 0 ? '\n' : pick(kAny);
          if (c == '/' && !body.empty() && body.back() == '*') c = 'q';
          body += c;
          if (c == '\n') ++s.newlines_in_block_comments;
        }
        if (!body.empty() && body.back() == '*') body += ' ';
        s.source += "/*" + body + "*/";
        s.expected_stripped += " ";
        break;
      }
    }
    if (rng() % 3 == 0) {
      s.source += '\n';
      s.expected_stripped += '\n';
    }
  }
  return s;
}

BackendReply RecordingBackend::send(const ChatRequest& request) {
  {
    std::lock_guard lock(mu_);
    prompts_.push_back(request.prompt);
  }
  return inner_->send(request);
}

std::vector<Prompt> RecordingBackend::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

}  // namespace rtlrefine::testing
