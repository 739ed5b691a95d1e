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

// Size and keyword filtration of a raw Verilog corpus.

#ifndef RTLREFINE_CORPUS_FILTER_H_
#define RTLREFINE_CORPUS_FILTER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rtlrefine/verilog_text.h"

namespace rtlrefine {

struct RawSample {
  std::string id;
  std::string origin;
  std::string code;
};

struct FilteredSample {
  std::string id;
  std::string origin;
  std::string code;
  std::string filtered_code;
};

struct FilterConfig {
  std::int64_t max_lines = 300;
  std::int64_t max_tokens = 1536;
  std::int64_t max_avg_tokens_per_line = 30;
  // Controls whether accepted samples carry comment-stripped code. The size
  // thresholds always look at the stripped text.
  bool strip_comments = true;

  // Throws std::invalid_argument on a non-positive threshold.
  void validate() const;
};

enum class RejectReason {
  kTooManyLines,
  kTooManyTokens,
  kLinesTooDense,
  kMissingModulePair,
  kMissingProceduralKeyword,
  kLexError,
};

inline constexpr RejectReason kAllRejectReasons[] = {
    RejectReason::kTooManyLines,         RejectReason::kTooManyTokens,
    RejectReason::kLinesTooDense,        RejectReason::kMissingModulePair,
    RejectReason::kMissingProceduralKeyword, RejectReason::kLexError,
};

std::string_view RejectReasonName(RejectReason reason);

struct FilterVerdict {
  std::string sample_id;
  bool accepted = false;
  std::set<RejectReason> reasons;
  LexStats stats;
  std::optional<std::string> filtered_code;  // set iff accepted
  std::string lex_error;                     // message when kLexError
};

struct FilterReport {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::map<RejectReason, std::int64_t> reasons;

  nlohmann::json to_json() const;
};

struct FilterResult {
  std::vector<FilteredSample> accepted;
  std::vector<FilterVerdict> verdicts;  // one per input sample, input order
  FilterReport report;
};

class DuplicateIdError : public std::runtime_error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : std::runtime_error("duplicate sample id '" + id + "'"), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

FilterVerdict filter_sample(const RawSample& sample, const FilterConfig& cfg);

// Samples are checked on up to `jobs` threads; results keep input order.
// Throws DuplicateIdError before any sample is filtered.
FilterResult filter_corpus(const std::vector<RawSample>& samples, const FilterConfig& cfg,
                           int jobs = 1);

RawSample raw_sample_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FilteredSample& s);
FilteredSample filtered_sample_from_json(const nlohmann::json& j);

}  // namespace rtlrefine

#endif  // RTLREFINE_CORPUS_FILTER_H_
