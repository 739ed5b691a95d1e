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


// Fixture builders shared by the unit tests and the acceptance runner.

#ifndef RTLREFINE_TESTS_FIXTURES_H_
#define RTLREFINE_TESTS_FIXTURES_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rtlrefine/augment_pipeline.h"
#include "rtlrefine/compile_harness.h"
#include "rtlrefine/corpus_filter.h"
#include "rtlrefine/evaluator.h"
#include "rtlrefine/llm_gateway.h"

namespace rtlrefine::testing {

// Marker the scripted toolchains treat as a syntax error.
inline constexpr const char* kBroken = "/*BROKEN*/";
// Marker that makes scripted simulations report a mismatch.
inline constexpr const char* kWrong = "/*WRONG*/";

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void WriteText(const std::filesystem::path& path, const std::string& text);
std::string ReadText(const std::filesystem::path& path);

// Compile fails on kBroken with a line-numbered message; simulation reports
// a mismatch on kWrong. Everything else passes.
std::shared_ptr<MockToolchain> MarkerToolchain();
nlohmann::json MarkerToolchainJson();

// Module text with exactly `lines` physical lines and `tokens` lexical tokens
// (counted by construction); the first body line holds an assign. Needs
// lines >= 3 and tokens >= lines + 6.
std::string SizedModule(std::int64_t lines, std::int64_t tokens);

struct HeaderPair {
  std::string label;
  std::string erroneous;
  std::string corrected;
  bool body_only;
};

// 10 body-only fixes and 10 fixes that alter a declaration.
std::vector<HeaderPair> HeaderPairs();

// pass@k by enumerating every k-subset of n samples (n <= 20).
double PassAtKByEnumeration(int n, int c, int k);

// Four repair cases: two get fully fixed, one compiles but fails its
// testbench, one stays broken.
struct FixFixture {
  std::vector<FixCase> cases;
  std::shared_ptr<MockBackend> backend;
  BackendEndpoint fixer;
};
FixFixture FourCaseFixFixture();
void WriteFixBenchmark(const std::filesystem::path& path, const std::vector<FixCase>& cases);

// Random benchmark with the given per-case outcome draws.
FixFixture RandomFixFixture(std::mt19937_64& rng);

// Augmentation corpus where sample i passes first try (i % 3 == 0), needs one
// fix (i % 3 == 1) or never compiles (i % 3 == 2). Responses are keyed by the
// per-sample seed base_seed + i.
struct AugmentFixture {
  std::vector<FilteredSample> corpus;
  std::shared_ptr<MockBackend> backend;
};
AugmentFixture ScriptedAugmentFixture(int samples, std::int64_t base_seed = 0);
void WriteFilteredCorpus(const std::filesystem::path& path, const std::vector<FilteredSample>& corpus);

// Random source made of code, strings, line and block comments, together with
// the text strip_comments must produce for it.
struct CommentedSource {
  std::string source;
  std::string expected_stripped;
  std::vector<std::string> strings;  // literals, quotes included
  std::int64_t newlines_in_block_comments = 0;
};
CommentedSource RandomCommentedSource(std::mt19937_64& rng);

// Records every prompt text before forwarding.
class RecordingBackend : public ChatBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}
  BackendReply send(const ChatRequest& request) override;
  bool probe(const BackendEndpoint& endpoint) override { return inner_->probe(endpoint); }
  std::vector<Prompt> prompts() const;

 private:
  std::shared_ptr<ChatBackend> inner_;
  mutable std::mutex mu_;
  std::vector<Prompt> prompts_;
};

BackendEndpoint Endpoint(const std::string& id, EndpointRole role);
GatewayOptions FastGatewayOptions();

}  // namespace rtlrefine::testing

#endif  // RTLREFINE_TESTS_FIXTURES_H_
