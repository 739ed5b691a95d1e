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

#include "rtlrefine/evaluator.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.h"
#include "rtlrefine/jsonl.h"

namespace rtlrefine {
namespace {

using testing::kBroken;
using testing::kWrong;
using testing::TempDir;

TEST(PassAtKTest, MatchesSubsetEnumeration) {
  for (int n = 1; n <= 12; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        EXPECT_NEAR(pass_at_k(n, c, k), testing::PassAtKByEnumeration(n, c, k), 1e-12)
            << n << "," << c << "," << k;
      }
    }
  }
}

TEST(PassAtKTest, KOneIsExactFraction) {
  for (int n = 1; n <= 50; ++n) {
    for (int c = 0; c <= n; ++c) {
      EXPECT_EQ(pass_at_k(n, c, 1), static_cast<double>(c) / static_cast<double>(n));
    }
  }
}

TEST(PassAtKTest, Examples) {
  EXPECT_EQ(pass_at_k(10, 0, 5), 0.0);
  EXPECT_EQ(pass_at_k(10, 3, 1), 0.3);
  EXPECT_NEAR(pass_at_k(10, 2, 5), 1.0 - 56.0 / 252.0, 1e-15);
  for (int c = 0; c <= 10; ++c) EXPECT_EQ(pass_at_k(10, c, 10), c >= 1 ? 1.0 : 0.0);
}

TEST(PassAtKTest, Monotone) {
  for (int n = 1; n <= 30; ++n) {
    for (int k = 1; k <= n; ++k) {
      EXPECT_EQ(pass_at_k(n, n, k), 1.0);
      EXPECT_EQ(pass_at_k(n, 0, k), 0.0);
      for (int c = 0; c <= n; ++c) {
        if (c < n) EXPECT_LE(pass_at_k(n, c, k), pass_at_k(n, c + 1, k));
        if (k < n) EXPECT_LE(pass_at_k(n, c, k), pass_at_k(n, c, k + 1));
      }
    }
  }
}

TEST(PassAtKTest, LargeNStaysInRange) {
  const double v = pass_at_k(100000, 3, 5000);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
}

TEST(PassAtKTest, DomainErrors) {
  EXPECT_THROW(pass_at_k(10, 3, 0), DomainError);
  EXPECT_THROW(pass_at_k(10, 3, 11), DomainError);
  EXPECT_THROW(pass_at_k(10, 11, 1), DomainError);
  EXPECT_THROW(pass_at_k(10, -1, 1), DomainError);
  EXPECT_THROW(pass_at_k(0, 0, 1), DomainError);
}

std::string Design(const std::string& id, const char* marker) {
  return "module " + id + "(input a, output y);\n  assign y = a;" + (marker ? marker : "") + "\nendmodule\n";
}

ReflectionTrace Trace(const std::string& code, ReflectionStatus status) {
  ReflectionTrace t;
  t.instruction = "task";
  t.final_status = status;
  CompileResult cr;
  cr.status = status == ReflectionStatus::kPass ? CompileStatus::kPass : CompileStatus::kSyntaxError;
  t.iterations.push_back({code, cr, "d", ""});
  return t;
}

// n traces: `func` simulate correctly, `syntax - func` compile but mismatch,
// the rest never compile.
InstructionTraces Traces(const std::string& id, int n, int syntax, int func) {
  InstructionTraces it{{id, "task " + id}, {}};
  for (int i = 0; i < n; ++i) {
    if (i < func) {
      it.traces.push_back(Trace(Design(id, nullptr), ReflectionStatus::kPass));
    } else if (i < syntax) {
      it.traces.push_back(Trace(Design(id, kWrong), ReflectionStatus::kPass));
    } else {
      it.traces.push_back(Trace(Design(id, kBroken), ReflectionStatus::kExhaustedFail));
    }
  }
  return it;
}

GenTask Task(const std::string& id) { return {id, "task " + id, {"module tb; endmodule\n", "tb"}, std::nullopt}; }

TEST(EvaluateGenerationTest, AllPass) {
  auto tc = testing::MarkerToolchain();
  const EvalReport r = evaluate_generation({Task("t")}, {Traces("t", 10, 10, 10)}, {1, 5, 10}, *tc);
  for (int k : {1, 5, 10}) EXPECT_EQ(r.pass_at_k.at(k), 1.0);
}

TEST(EvaluateGenerationTest, NonePass) {
  auto tc = testing::MarkerToolchain();
  const EvalReport r = evaluate_generation({Task("t")}, {Traces("t", 10, 6, 0)}, {1, 5, 10}, *tc);
  for (int k : {1, 5, 10}) EXPECT_EQ(r.pass_at_k.at(k), 0.0);
  EXPECT_EQ(r.tasks[0].counts.c_syntax, 6);
  EXPECT_EQ(r.syntax_pass_at_k.at(1), 0.6);
}

TEST(EvaluateGenerationTest, MeanOverTasks) {
  auto tc = testing::MarkerToolchain();
  const EvalReport r = evaluate_generation({Task("a"), Task("b")}, {Traces("a", 10, 5, 3), Traces("b", 10, 9, 7)},
                                           {1}, *tc, 4);
  EXPECT_DOUBLE_EQ(r.pass_at_k.at(1), 0.5);
  ASSERT_EQ(r.tasks.size(), 2u);
  EXPECT_EQ(r.tasks[0].counts.c_func, 3);
  EXPECT_EQ(r.tasks[1].counts.c_func, 7);
  EXPECT_EQ(r.tasks[1].counts.c_syntax, 9);
  const nlohmann::json j = r.to_json();
  EXPECT_DOUBLE_EQ(j.at("pass_at_k").at("1").get<double>(), 0.5);
  EXPECT_EQ(j.at("tasks").size(), 2u);
  EXPECT_NE(r.to_table().find("pass@1"), std::string::npos);
}

TEST(EvaluateGenerationTest, MissingOrShortTraces) {
  auto tc = testing::MarkerToolchain();
  EXPECT_THROW(evaluate_generation({Task("a"), Task("b")}, {Traces("a", 10, 1, 1)}, {1}, *tc), MissingTracesError);
  EXPECT_THROW(evaluate_generation({Task("a"), Task("b")}, {Traces("a", 10, 1, 1), Traces("b", 9, 1, 1)}, {1}, *tc),
               MissingTracesError);
  EXPECT_THROW(evaluate_generation({Task("a")}, {Traces("a", 4, 1, 1)}, {5}, *tc), DomainError);
}

TEST(EvaluateGenerationTest, PermutationInvariant) {
  auto tc = testing::MarkerToolchain();
  std::mt19937_64 rng(7);
  std::vector<GenTask> tasks;
  std::vector<InstructionTraces> traces;
  for (int i = 0; i < 12; ++i) {
    const std::string id = "t" + std::to_string(i);
    const int syntax = static_cast<int>(rng() % 11);
    const int func = syntax == 0 ? 0 : static_cast<int>(rng() % (syntax + 1));
    tasks.push_back(Task(id));
    traces.push_back(Traces(id, 10, syntax, func));
  }
  const std::string base = evaluate_generation(tasks, traces, {1, 5, 10}, *tc).to_json().dump();
  for (int round = 0; round < 5; ++round) {
    std::shuffle(tasks.begin(), tasks.end(), rng);
    std::shuffle(traces.begin(), traces.end(), rng);
    EXPECT_EQ(evaluate_generation(tasks, traces, {1, 5, 10}, *tc, 3).to_json().dump(), base);
  }
}

TEST(EvaluateGenerationTest, AggregateIsMeanOfPerTask) {
  auto tc = testing::MarkerToolchain();
  const EvalReport r = evaluate_generation({Task("a"), Task("b"), Task("c")},
                                           {Traces("a", 10, 2, 1), Traces("b", 10, 10, 4), Traces("c", 10, 0, 0)},
                                           {1, 5}, *tc);
  for (int k : {1, 5}) {
    const double mean = (pass_at_k(10, 1, k) + pass_at_k(10, 4, k) + pass_at_k(10, 0, k)) / 3.0;
    EXPECT_NEAR(r.pass_at_k.at(k), mean, 1e-15);
  }
}

FixerConfig Fixer(const testing::FixFixture& f) { return FixerConfig{f.fixer, {}}; }

TEST(EvaluateFixTest, FourCaseFixture) {
  auto f = testing::FourCaseFixFixture();
  LlmGateway gw(f.backend, testing::FastGatewayOptions());
  auto tc = testing::MarkerToolchain();
  const EvalReport r = evaluate_fix(f.cases, Fixer(f), gw, *tc, 2);
  ASSERT_TRUE(r.syntactic_rate && r.functional_rate);
  EXPECT_EQ(*r.syntactic_rate, 75.0);
  EXPECT_EQ(*r.functional_rate, 50.0);
  ASSERT_EQ(r.fix_cases.size(), 4u);
  EXPECT_TRUE(r.fix_cases[0].functional);
  EXPECT_TRUE(r.fix_cases[2].syntactic);
  EXPECT_FALSE(r.fix_cases[2].functional);
  EXPECT_FALSE(r.fix_cases[3].syntactic);
  const nlohmann::json j = r.to_json();
  EXPECT_EQ(j.at("syntactic_rate"), 75.0);
  EXPECT_EQ(j.at("functional_rate"), 50.0);
  EXPECT_EQ(j.at("case_count"), 4);
  EXPECT_NE(r.to_table().find("75.0"), std::string::npos);
}

TEST(EvaluateFixTest, FunctionalNeverExceedsSyntactic) {
  std::mt19937_64 rng(2026);
  auto tc = testing::MarkerToolchain();
  for (int i = 0; i < 1000; ++i) {
    auto f = testing::RandomFixFixture(rng);
    LlmGateway gw(f.backend, testing::FastGatewayOptions());
    const EvalReport r = evaluate_fix(f.cases, Fixer(f), gw, *tc);
    if (f.cases.empty()) {
      EXPECT_FALSE(r.syntactic_rate.has_value());
      continue;
    }
    ASSERT_TRUE(r.syntactic_rate && r.functional_rate);
    EXPECT_LE(*r.functional_rate, *r.syntactic_rate);
    for (const auto& o : r.fix_cases) EXPECT_TRUE(!o.functional || o.syntactic);
  }
}

TEST(EvaluateFixTest, NoCasesLeavesRatesAbsent) {
  auto mock = std::make_shared<MockBackend>();
  LlmGateway gw(mock, testing::FastGatewayOptions());
  auto tc = testing::MarkerToolchain();
  const EvalReport r = evaluate_fix({}, {testing::Endpoint("fix", EndpointRole::kFix), {}}, gw, *tc);
  EXPECT_FALSE(r.syntactic_rate.has_value());
  EXPECT_FALSE(r.functional_rate.has_value());
  EXPECT_TRUE(r.to_json().at("syntactic_rate").is_null());
  EXPECT_EQ(r.to_json().at("case_count"), 0);
}

TEST(EvaluateFixTest, RequiresFixRole) {
  auto mock = std::make_shared<MockBackend>();
  LlmGateway gw(mock, testing::FastGatewayOptions());
  auto tc = testing::MarkerToolchain();
  EXPECT_THROW(evaluate_fix({}, {testing::Endpoint("g", EndpointRole::kGen), {}}, gw, *tc), std::invalid_argument);
}

TEST(EvaluateFixTest, OneAttemptPerCase) {
  auto f = testing::FourCaseFixFixture();
  LlmGateway gw(f.backend, testing::FastGatewayOptions());
  auto tc = testing::MarkerToolchain();
  evaluate_fix(f.cases, Fixer(f), gw, *tc);
  EXPECT_EQ(gw.log().size(), 4u);
}

TEST(LoadFixBenchmarkTest, RoundTripAndVerification) {
  TempDir dir;
  auto f = testing::FourCaseFixFixture();
  testing::WriteFixBenchmark(dir / "fix.jsonl", f.cases);
  auto tc = testing::MarkerToolchain();
  const auto loaded = load_fix_benchmark(dir / "fix.jsonl", tc.get(), 2);
  ASSERT_EQ(loaded.size(), 4u);
  EXPECT_EQ(loaded[1].id, "case2");
  EXPECT_EQ(loaded[1].erroneous_code.content, f.cases[1].erroneous_code.content);
  EXPECT_EQ(loaded[1].error_message, f.cases[1].error_message);
}

TEST(LoadFixBenchmarkTest, ManyCases) {
  TempDir dir;
  std::vector<FixCase> cases;
  for (int i = 0; i < 221; ++i) {
    cases.push_back({"c" + std::to_string(i), "instr", {Design("m", kBroken), ""}, "design.v:2: syntax error\n",
                     {"module tb; endmodule\n", ""}});
  }
  testing::WriteFixBenchmark(dir / "fix.jsonl", cases);
  auto tc = testing::MarkerToolchain();
  EXPECT_EQ(load_fix_benchmark(dir / "fix.jsonl", tc.get(), 4).size(), 221u);
}

TEST(LoadFixBenchmarkTest, MissingFieldReportsLine) {
  TempDir dir;
  testing::WriteText(dir / "fix.jsonl",
                     R"({"id":"a","instruction":"i","erroneous_code":"x","error_message":"e","testbench":"t"})"
                     "\n"
                     R"({"id":"b","instruction":"i","erroneous_code":"x","testbench":"t"})"
                     "\n");
  try {
    load_fix_benchmark(dir / "fix.jsonl");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("error_message"), std::string::npos);
  }
}

TEST(LoadFixBenchmarkTest, EmptyFile) {
  TempDir dir;
  testing::WriteText(dir / "fix.jsonl", "");
  EXPECT_TRUE(load_fix_benchmark(dir / "fix.jsonl").empty());
}

TEST(LoadFixBenchmarkTest, MissingFileIsIoError) {
  EXPECT_THROW(load_fix_benchmark("/nonexistent/fix.jsonl"), IoError);
}

TEST(LoadFixBenchmarkTest, CompilingCaseIsRejected) {
  TempDir dir;
  auto f = testing::FourCaseFixFixture();
  f.cases[2].erroneous_code.content = Design("case3", nullptr);
  testing::WriteFixBenchmark(dir / "fix.jsonl", f.cases);
  auto tc = testing::MarkerToolchain();
  try {
    load_fix_benchmark(dir / "fix.jsonl", tc.get());
    FAIL();
  } catch (const InvariantViolation& e) {
    EXPECT_EQ(e.ids(), std::vector<std::string>{"case3"});
    EXPECT_NE(std::string(e.what()).find("case3"), std::string::npos);
  }
  // Without a toolchain nothing is compiled.
  EXPECT_EQ(load_fix_benchmark(dir / "fix.jsonl").size(), 4u);
}

TEST(LoadFixBenchmarkTest, DuplicateIds) {
  TempDir dir;
  auto f = testing::FourCaseFixFixture();
  f.cases[1].id = "case1";
  testing::WriteFixBenchmark(dir / "fix.jsonl", f.cases);
  EXPECT_THROW(load_fix_benchmark(dir / "fix.jsonl"), InvariantViolation);
}

TEST(LoadGenBenchmarkTest, ReferenceMustPass) {
  TempDir dir;
  testing::WriteText(dir / "gen.jsonl",
                     jsonl_line({{"id", "a"}, {"instruction", "i"}, {"testbench", "tb"}, {"reference", Design("a", nullptr)}}) +
                         jsonl_line({{"id", "b"}, {"instruction", "i"}, {"testbench", "tb"}}));
  auto tc = testing::MarkerToolchain();
  const auto tasks = load_gen_benchmark(dir / "gen.jsonl", tc.get());
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_TRUE(tasks[0].reference.has_value());
  EXPECT_FALSE(tasks[1].reference.has_value());

  testing::WriteText(dir / "bad.jsonl", jsonl_line({{"id", "a"},
                                                     {"instruction", "i"},
                                                     {"testbench", "tb"},
                                                     {"reference", Design("a", kBroken)}}));
  EXPECT_THROW(load_gen_benchmark(dir / "bad.jsonl", tc.get()), InvariantViolation);
}

}  // namespace
}  // namespace rtlrefine
