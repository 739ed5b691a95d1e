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

#include "rtlrefine/augment_pipeline.h"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "fixtures.h"
#include "rtlrefine/jsonl.h"

namespace rtlrefine {
namespace {

using testing::kBroken;
using testing::TempDir;

class AugmentTest : public ::testing::Test {
 protected:
  AugmentConfig config(int max_fix = 3) const {
    AugmentConfig c;
    c.max_fix_iterations = max_fix;
    c.teacher = testing::Endpoint("teacher", EndpointRole::kTeacher);
    return c;
  }

  std::int64_t teacher_calls(LlmGateway& gw) const {
    std::int64_t n = 0;
    for (const auto& e : gw.log().entries()) n += e.endpoint_id == "teacher" ? 1 : 0;
    return n;
  }

  std::shared_ptr<MockToolchain> tc_ = testing::MarkerToolchain();
};

const std::string kGood = "module s(input a, output y);\n  assign y = a;\nendmodule\n";
const FilteredSample kSample{"s", "s.v", kGood, kGood};

TEST_F(AugmentTest, FirstCodeCompiles) {
  auto mock = std::make_shared<MockBackend>();
  mock->script_text(render_description_prompt(kGood), {"Copies a to y.\n"});
  mock->script_text(render_generation_prompt("Copies a to y."), {"```verilog\n" + kGood + "```"});
  LlmGateway gw(mock, testing::FastGatewayOptions());
  const SampleOutcome o = augment_sample(kSample, config(), gw, *tc_);
  EXPECT_EQ(o.enhanced.compile_status, AugmentStatus::kPass);
  EXPECT_EQ(o.enhanced.attempts_used, 1);
  EXPECT_EQ(o.enhanced.description, "Copies a to y.");
  // Extraction trims the whitespace around a fenced block.
  EXPECT_EQ(o.enhanced.final_code, kGood.substr(0, kGood.size() - 1));
  EXPECT_TRUE(o.corrections.empty());
  EXPECT_EQ(teacher_calls(gw), 2);
}

TEST_F(AugmentTest, WireInAlwaysFixedOnSecondAttempt) {
  const std::string bad = std::string("module s(input a, output y);\n  wire t;\n  always @(*) t = a; ") +
                          kBroken + "\n  assign y = t;\nendmodule";
  const std::string fixed = "module s(input a, output y);\n  wire t;\n  assign t = a;\n  assign y = t;\nendmodule";
  auto mock = std::make_shared<MockBackend>();
  mock->script_text(render_description_prompt(kGood), {"Copies a to y."});
  mock->script_text(render_generation_prompt("Copies a to y."), {"```verilog\n" + bad + "\n```"});
  const Prompt debug = render_debug_prompt("Copies a to y.", bad, "design.v:2: syntax error\n");
  mock->script_text(debug, {"```verilog\n" + fixed + "\n```"});
  LlmGateway gw(mock, testing::FastGatewayOptions());

  const SampleOutcome o = augment_sample(kSample, config(), gw, *tc_);
  EXPECT_EQ(o.enhanced.compile_status, AugmentStatus::kPass);
  EXPECT_EQ(o.enhanced.attempts_used, 2);
  ASSERT_EQ(o.corrections.size(), 1u);
  const ErrorCorrectionRecord& r = o.corrections[0];
  EXPECT_EQ(r.sample_id, "s");
  EXPECT_EQ(r.instruction, "Copies a to y.");
  EXPECT_EQ(r.erroneous_code, bad);
  EXPECT_EQ(r.corrected_code, fixed);
  EXPECT_EQ(r.error_message, "design.v:2: syntax error\n");
  EXPECT_EQ(teacher_calls(gw), 2 + (o.enhanced.attempts_used - 1));
}

TEST_F(AugmentTest, ExhaustedBudget) {
  const std::string bad = std::string("module s(input a, output y); ") + kBroken + "\nendmodule\n";
  auto mock = std::make_shared<MockBackend>();
  mock->script_text(render_description_prompt(kGood), {"Copies a to y."});
  mock->script_text(render_generation_prompt("Copies a to y."), {bad});
  mock->script(TemplateId::kDebugInstruction, "*", {{"```\n" + bad + "```", std::nullopt, 0}});
  LlmGateway gw(mock, testing::FastGatewayOptions());
  const SampleOutcome o = augment_sample(kSample, config(2), gw, *tc_);
  EXPECT_EQ(o.enhanced.compile_status, AugmentStatus::kFail);
  EXPECT_EQ(o.enhanced.attempts_used, 3);
  EXPECT_TRUE(o.corrections.empty());
  EXPECT_EQ(o.drops.at(DropReason::kNeverFixed), 3);
  EXPECT_EQ(teacher_calls(gw), 2 + (o.enhanced.attempts_used - 1));
}

TEST_F(AugmentTest, ZeroFixBudgetCompilesOnce) {
  const std::string bad = std::string("module s(input a, output y); ") + kBroken + "\nendmodule\n";
  auto mock = std::make_shared<MockBackend>();
  mock->script_text(render_description_prompt(kGood), {"d"});
  mock->script_text(render_generation_prompt("d"), {bad});
  LlmGateway gw(mock, testing::FastGatewayOptions());
  const SampleOutcome o = augment_sample(kSample, config(0), gw, *tc_);
  EXPECT_EQ(o.enhanced.attempts_used, 1);
  EXPECT_EQ(o.enhanced.compile_status, AugmentStatus::kFail);
  EXPECT_EQ(teacher_calls(gw), 2);
}

TEST_F(AugmentTest, TeacherFailureMarksSampleFailed) {
  auto mock = std::make_shared<MockBackend>();
  mock->script(TemplateId::kDescription, "*", {{std::nullopt, BackendError::Kind::kAuth, 0}});
  LlmGateway gw(mock, testing::FastGatewayOptions());
  const SampleOutcome o = augment_sample(kSample, config(), gw, *tc_);
  EXPECT_EQ(o.enhanced.compile_status, AugmentStatus::kFail);
  EXPECT_EQ(o.enhanced.attempts_used, 0);
  EXPECT_NE(o.enhanced.failure.find("TeacherUnavailable"), std::string::npos);
}

TEST_F(AugmentTest, NoCodeMarksSampleFailed) {
  auto mock = std::make_shared<MockBackend>();
  mock->script_text(render_description_prompt(kGood), {"d"});
  mock->script_text(render_generation_prompt("d"), {"I would rather not."});
  LlmGateway gw(mock, testing::FastGatewayOptions());
  const SampleOutcome o = augment_sample(kSample, config(), gw, *tc_);
  EXPECT_EQ(o.enhanced.compile_status, AugmentStatus::kFail);
  EXPECT_NE(o.enhanced.failure.find("NoCodeFound"), std::string::npos);
}

TEST_F(AugmentTest, ToolErrorStopsWithoutFixing) {
  auto mock = std::make_shared<MockBackend>();
  mock->script_text(render_description_prompt(kGood), {"d"});
  mock->script_text(render_generation_prompt("d"), {kGood});
  LlmGateway gw(mock, testing::FastGatewayOptions());
  MockToolchain broken_tools({}, {}, MockToolchain::Outcome{127, "sh: iverilog: not found\n", false, false}, {});
  const SampleOutcome o = augment_sample(kSample, config(), gw, broken_tools);
  EXPECT_EQ(o.enhanced.compile_status, AugmentStatus::kFail);
  EXPECT_EQ(o.enhanced.attempts_used, 1);
  EXPECT_EQ(o.enhanced.failure, "compile ToolError");
}

TEST_F(AugmentTest, UnscriptedCallIsNotSwallowed) {
  auto mock = std::make_shared<MockBackend>();
  LlmGateway gw(mock, testing::FastGatewayOptions());
  EXPECT_THROW(augment_sample(kSample, config(), gw, *tc_), UnscriptedCallError);
}

TEST_F(AugmentTest, RoleIsEnforced) {
  AugmentConfig c = config();
  c.teacher.role = EndpointRole::kGen;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = config(-1);
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST_F(AugmentTest, HeaderPairsKeepOnlyBodyFixes) {
  std::vector<CorrectionCandidate> candidates;
  std::set<std::string> body_only;
  for (const auto& p : testing::HeaderPairs()) {
    candidates.push_back({p.label, "fix it", p.erroneous, "design.v:2: syntax error\n", p.corrected});
    if (p.body_only) body_only.insert(p.erroneous);
  }
  ASSERT_EQ(candidates.size(), 20u);
  ASSERT_EQ(body_only.size(), 10u);
  const CorrectionBuildResult r = build_error_correction_dataset(candidates, *tc_);
  ASSERT_EQ(r.records.size(), 10u);
  for (const auto& rec : r.records) EXPECT_TRUE(body_only.contains(rec.erroneous_code)) << rec.sample_id;
  EXPECT_EQ(r.drops.at(DropReason::kHeaderChanged), 10);
}

TEST_F(AugmentTest, DropReasons) {
  const std::string good = "module a(input x, output y);\n  assign y = x;\nendmodule\n";
  const std::string bad = std::string("module a(input x, output y);\n  assign y = x ") + kBroken + "\nendmodule\n";
  const std::string renamed = "module a(input x, output z);\n  assign z = x;\nendmodule\n";
  const std::string still_bad = std::string("module a(input x, output y);\n  assign y = x; ") + kBroken + "\nendmodule\n";
  std::vector<CorrectionCandidate> c = {
      {"1", "i", bad, "design.v:2: syntax error\n", good},
      {"2", "i", bad, "design.v:2: syntax error\n", renamed},
      {"3", "i", bad, "design.v:2: syntax error\n", still_bad},
      {"4", "i", bad, "  \n", good},
      {"5", "i", "module a(input x; \"unterminated\n", "e", good},
      {"6", "i", bad, "design.v:2: syntax error\n", good},
  };
  const auto before = tc_->compile_calls();
  const CorrectionBuildResult r = build_error_correction_dataset(c, *tc_);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].sample_id, "1");
  EXPECT_EQ(r.records[1].sample_id, "6");
  EXPECT_EQ(r.drops.at(DropReason::kHeaderChanged), 1);
  EXPECT_EQ(r.drops.at(DropReason::kRecompileFailed), 1);
  EXPECT_EQ(r.drops.at(DropReason::kEmptyError), 1);
  EXPECT_EQ(r.drops.at(DropReason::kUnparsableHeader), 1);
  // The same corrected code is verified once.
  EXPECT_EQ(tc_->compile_calls() - before, 2);
}

TEST_F(AugmentTest, EmittedRecordsSurviveIndependentRecheck) {
  auto f = testing::ScriptedAugmentFixture(9);
  LlmGateway gw(f.backend, testing::FastGatewayOptions());
  auto fresh = testing::MarkerToolchain();
  for (std::size_t i = 0; i < f.corpus.size(); ++i) {
    const SampleOutcome o = augment_sample(f.corpus[i], config(), gw, *tc_, static_cast<std::int64_t>(i));
    EXPECT_LE(o.enhanced.attempts_used, 1 + config().max_fix_iterations);
    for (const auto& rec : o.corrections) {
      EXPECT_EQ(fresh->compile({rec.corrected_code, ""}, {}).status, CompileStatus::kPass);
      EXPECT_TRUE(headers_equal(module_headers_of(rec.erroneous_code), module_headers_of(rec.corrected_code)));
      EXPECT_FALSE(rec.error_message.empty());
    }
  }
}

class RunAugmentationTest : public AugmentTest {};

TEST_F(RunAugmentationTest, ThreeSampleReport) {
  auto f = testing::ScriptedAugmentFixture(3);
  LlmGateway gw(f.backend, testing::FastGatewayOptions());
  TempDir dir;
  RunOptions opts;
  opts.base_seed = 0;
  const RunReport r = run_augmentation(f.corpus, config(), gw, *tc_, dir.path(), opts);
  EXPECT_EQ(r.samples, 3);
  EXPECT_EQ(r.pass_first_try, 1);
  EXPECT_EQ(r.pass_after_fix, 1);
  EXPECT_EQ(r.failed, 1);
  EXPECT_EQ(r.corrections_emitted, 1);
  EXPECT_EQ(r.corrections_dropped.at(DropReason::kNeverFixed), 4);

  const auto enhanced = read_jsonl(dir / std::string(kEnhancedFile));
  ASSERT_EQ(enhanced.size(), 2u);
  EXPECT_EQ(enhanced[0].at("sample_id"), "s0");
  EXPECT_EQ(enhanced[1].at("sample_id"), "s1");
  for (const char* key : {"sample_id", "description", "code", "compile_status", "attempts"}) {
    EXPECT_TRUE(enhanced[0].contains(key)) << key;
  }
  EXPECT_EQ(read_jsonl(dir / std::string(kRejectsFile)).size(), 1u);
  const auto corrections = read_jsonl(dir / std::string(kCorrectionsFile));
  ASSERT_EQ(corrections.size(), 1u);
  EXPECT_EQ(correction_from_json(corrections[0]).sample_id, "s1");
  const auto report = nlohmann::json::parse(testing::ReadText(dir / std::string(kReportFile)));
  EXPECT_EQ(report, r.to_json());
  EXPECT_EQ(report.at("corrections_dropped_by_reason").at("NeverFixed"), 4);
}

TEST_F(RunAugmentationTest, EmptyCorpus) {
  auto mock = std::make_shared<MockBackend>();
  LlmGateway gw(mock, testing::FastGatewayOptions());
  TempDir dir;
  const RunReport r = run_augmentation({}, config(), gw, *tc_, dir.path());
  EXPECT_EQ(r.samples, 0);
  EXPECT_EQ(r.corrections_emitted, 0);
  EXPECT_EQ(testing::ReadText(dir / std::string(kEnhancedFile)), "");
  EXPECT_EQ(testing::ReadText(dir / std::string(kCorrectionsFile)), "");
  EXPECT_EQ(mock->calls(), 0u);
}

TEST_F(RunAugmentationTest, ResumeSkipsFinishedSamples) {
  auto f = testing::ScriptedAugmentFixture(3);
  TempDir dir;
  RunOptions opts;
  opts.base_seed = 0;
  std::string full_enhanced;
  std::string full_corrections;
  {
    TempDir ref;
    LlmGateway gw(f.backend, testing::FastGatewayOptions());
    run_augmentation(f.corpus, config(), gw, *tc_, ref.path(), opts);
    full_enhanced = testing::ReadText(ref / std::string(kEnhancedFile));
    full_corrections = testing::ReadText(ref / std::string(kCorrectionsFile));
  }

  // First run is stopped after two samples.
  std::vector<FilteredSample> first_two(f.corpus.begin(), f.corpus.begin() + 2);
  {
    LlmGateway gw(f.backend, testing::FastGatewayOptions());
    run_augmentation(first_two, config(), gw, *tc_, dir.path(), opts);
  }
  // A torn record of the unfinished sample must be discarded on resume.
  {
    std::ofstream out(dir / std::string(kEnhancedFile), std::ios::app);
    out << R"({"sample_id":"s2","desc)";
  }
  opts.resume = true;
  LlmGateway gw(f.backend, testing::FastGatewayOptions());
  const RunReport r = run_augmentation(f.corpus, config(), gw, *tc_, dir.path(), opts);
  EXPECT_EQ(r.samples, 3);
  EXPECT_EQ(r.pass_first_try, 1);
  EXPECT_EQ(r.pass_after_fix, 1);
  EXPECT_EQ(r.failed, 1);
  EXPECT_EQ(r.corrections_emitted, 1);
  // Only s2 was processed: describe, generate and three fix rounds.
  const std::string s2_digest = render_description_prompt(f.corpus[2].filtered_code).inputs_digest;
  for (const auto& e : gw.log().entries()) {
    if (e.template_id == TemplateId::kDescription) EXPECT_EQ(e.inputs_digest, s2_digest);
  }
  EXPECT_EQ(gw.log().size(), 5u);
  EXPECT_EQ(testing::ReadText(dir / std::string(kEnhancedFile)), full_enhanced);
  EXPECT_EQ(testing::ReadText(dir / std::string(kCorrectionsFile)), full_corrections);

  LlmGateway again(f.backend, testing::FastGatewayOptions());
  run_augmentation(f.corpus, config(), again, *tc_, dir.path(), opts);
  EXPECT_EQ(again.log().size(), 0u);
}

TEST_F(RunAugmentationTest, ByteIdenticalAcrossJobCounts) {
  std::string enhanced;
  std::string corrections;
  for (int jobs : {1, 8, 1, 8}) {
    auto f = testing::ScriptedAugmentFixture(10, 100);
    LlmGateway gw(f.backend, testing::FastGatewayOptions());
    TempDir dir;
    RunOptions opts;
    opts.jobs = jobs;
    opts.base_seed = 100;
    run_augmentation(f.corpus, config(), gw, *tc_, dir.path(), opts);
    const std::string e = testing::ReadText(dir / std::string(kEnhancedFile));
    const std::string c = testing::ReadText(dir / std::string(kCorrectionsFile));
    if (enhanced.empty()) {
      enhanced = e;
      corrections = c;
    }
    EXPECT_EQ(e, enhanced) << "jobs " << jobs;
    EXPECT_EQ(c, corrections) << "jobs " << jobs;
  }
  EXPECT_FALSE(enhanced.empty());
  EXPECT_FALSE(corrections.empty());
}

TEST_F(RunAugmentationTest, RecordJsonRoundTrip) {
  const ErrorCorrectionRecord r{"id", "instr", "bad", "err", "good"};
  EXPECT_EQ(correction_from_json(to_json(r)), r);
  EnhancedRecord e;
  e.sample_id = "x";
  e.compile_status = AugmentStatus::kFail;
  e.failure = "why";
  EXPECT_EQ(to_json(e).at("failure"), "why");
  e.compile_status = AugmentStatus::kPass;
  EXPECT_FALSE(to_json(e).contains("failure"));
}

}  // namespace
}  // namespace rtlrefine
