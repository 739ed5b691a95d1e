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

// Code-to-code augmentation: describe each filtered sample with the teacher
// model, regenerate code from the description, and repair it against the
// compiler until it builds or the fix budget runs out. Produces the enhanced
// (description, code) dataset and the error-correction dataset harvested
// from the failed rounds.

#ifndef RTLREFINE_AUGMENT_PIPELINE_H_
#define RTLREFINE_AUGMENT_PIPELINE_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rtlrefine/compile_harness.h"
#include "rtlrefine/corpus_filter.h"
#include "rtlrefine/llm_gateway.h"

namespace rtlrefine {

enum class AugmentStatus { kPass, kFail };

struct EnhancedRecord {
  std::string sample_id;
  std::string description;
  std::string final_code;
  AugmentStatus compile_status = AugmentStatus::kFail;
  // Compiles performed; 0 only when the sample failed before any code existed.
  int attempts_used = 0;
  std::string failure;  // why a kFail sample failed
};

struct ErrorCorrectionRecord {
  std::string sample_id;
  std::string instruction;
  std::string erroneous_code;
  std::string error_message;
  std::string corrected_code;

  bool operator==(const ErrorCorrectionRecord&) const = default;
};

using CorrectionCandidate = ErrorCorrectionRecord;

enum class DropReason {
  kHeaderChanged,     // the fix altered a module declaration
  kRecompileFailed,   // the corrected code does not compile on re-check
  kUnparsableHeader,  // declarations could not be lexed or extracted
  kEmptyError,        // no compiler message to learn from
  kNeverFixed,        // the sample never compiled, so there is no corrected code
};

inline constexpr DropReason kAllDropReasons[] = {
    DropReason::kHeaderChanged, DropReason::kRecompileFailed, DropReason::kUnparsableHeader,
    DropReason::kEmptyError, DropReason::kNeverFixed,
};

std::string_view DropReasonName(DropReason r);

using DropCounts = std::map<DropReason, std::int64_t>;

struct CorrectionBuildResult {
  std::vector<ErrorCorrectionRecord> records;
  DropCounts drops;
};

// Keeps candidates whose corrected code compiles again now and whose module
// declarations match the erroneous code's token for token.
CorrectionBuildResult build_error_correction_dataset(const std::vector<CorrectionCandidate>& candidates,
                                                     Toolchain& toolchain);

struct AugmentConfig {
  int max_fix_iterations = 3;
  BackendEndpoint teacher;
  CompletionParams params;

  // Throws std::invalid_argument.
  void validate() const;
};

struct SampleOutcome {
  EnhancedRecord enhanced;
  std::vector<ErrorCorrectionRecord> corrections;
  DropCounts drops;
};

// Throws only UnscriptedCallError (broken mock fixture); model and tool
// failures mark the sample kFail. `seed` overrides cfg.params.seed.
SampleOutcome augment_sample(const FilteredSample& sample, const AugmentConfig& cfg,
                             LlmGateway& gateway, Toolchain& toolchain,
                             std::optional<std::int64_t> seed = std::nullopt);

struct RunReport {
  std::int64_t samples = 0;
  std::int64_t pass_first_try = 0;
  std::int64_t pass_after_fix = 0;
  std::int64_t failed = 0;
  std::int64_t corrections_emitted = 0;
  DropCounts corrections_dropped;

  void add(const SampleOutcome& outcome);
  nlohmann::json to_json() const;
};

struct RunOptions {
  int jobs = 1;
  bool resume = false;
  // Sample i of the corpus is requested with seed base_seed + i when set.
  std::optional<std::int64_t> base_seed;
  const std::atomic<bool>* stop = nullptr;  // graceful drain when set
};

// Output file names inside the run directory.
inline constexpr std::string_view kEnhancedFile = "enhanced.jsonl";
inline constexpr std::string_view kRejectsFile = "rejects.jsonl";
inline constexpr std::string_view kCorrectionsFile = "corrections.jsonl";
inline constexpr std::string_view kReportFile = "report.json";
inline constexpr std::string_view kProgressFile = "progress.jsonl";

// Processes the corpus and writes enhanced.jsonl (passing samples),
// rejects.jsonl (failed samples), corrections.jsonl, progress.jsonl and
// report.json into out_dir. Records are committed in corpus order whatever
// the job count. With resume, samples recorded in progress.jsonl are skipped
// and partially written records of unfinished samples are discarded.
// Throws IoError when outputs cannot be written.
RunReport run_augmentation(const std::vector<FilteredSample>& corpus, const AugmentConfig& cfg,
                           LlmGateway& gateway, Toolchain& toolchain,
                           const std::filesystem::path& out_dir, const RunOptions& options = {});

nlohmann::json to_json(const EnhancedRecord& r);
nlohmann::json to_json(const ErrorCorrectionRecord& r);
ErrorCorrectionRecord correction_from_json(const nlohmann::json& j);

}  // namespace rtlrefine

#endif  // RTLREFINE_AUGMENT_PIPELINE_H_
