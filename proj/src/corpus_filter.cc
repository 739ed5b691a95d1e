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

#include "rtlrefine/corpus_filter.h"

#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "rtlrefine/jsonl.h"
#include "rtlrefine/worker_pool.h"

namespace rtlrefine {

void FilterConfig::validate() const {
  if (max_lines <= 0 || max_tokens <= 0 || max_avg_tokens_per_line <= 0) {
    throw std::invalid_argument("filter thresholds must be strictly positive");
  }
}

std::string_view RejectReasonName(RejectReason reason) {
  switch (reason) {
    case RejectReason::kTooManyLines: return "TooManyLines";
    case RejectReason::kTooManyTokens: return "TooManyTokens";
    case RejectReason::kLinesTooDense: return "LinesTooDense";
    case RejectReason::kMissingModulePair: return "MissingModulePair";
    case RejectReason::kMissingProceduralKeyword: return "MissingProceduralKeyword";
    case RejectReason::kLexError: return "LexError";
  }
  return "?";
}

nlohmann::json FilterReport::to_json() const {
  nlohmann::json by_reason = nlohmann::json::object();
  for (RejectReason r : kAllRejectReasons) {
    auto it = reasons.find(r);
    by_reason[std::string(RejectReasonName(r))] = it == reasons.end() ? 0 : it->second;
  }
  return {{"accepted", accepted}, {"rejected", rejected}, {"reasons", by_reason}};
}

FilterVerdict filter_sample(const RawSample& sample, const FilterConfig& cfg) {
  FilterVerdict verdict;
  verdict.sample_id = sample.id;
  std::string stripped;
  std::vector<LexToken> tokens;
  try {
    stripped = strip_comments(std::string_view(sample.code));
    tokens = tokenize(stripped);
  } catch (const LexError& e) {
    verdict.reasons.insert(RejectReason::kLexError);
    verdict.lex_error = e.what();
    return verdict;
  }

  verdict.stats.line_count = count_lines(stripped);
  verdict.stats.token_count = static_cast<std::int64_t>(tokens.size());
  if (verdict.stats.line_count > cfg.max_lines) verdict.reasons.insert(RejectReason::kTooManyLines);
  if (verdict.stats.token_count > cfg.max_tokens) {
    verdict.reasons.insert(RejectReason::kTooManyTokens);
  }
  if (verdict.stats.density_exceeds(cfg.max_avg_tokens_per_line)) {
    verdict.reasons.insert(RejectReason::kLinesTooDense);
  }
  const KeywordReport keywords = detect_required_keywords(tokens);
  if (!keywords.has_module_pair) verdict.reasons.insert(RejectReason::kMissingModulePair);
  if (!keywords.has_procedural) verdict.reasons.insert(RejectReason::kMissingProceduralKeyword);

  verdict.accepted = verdict.reasons.empty();
  if (verdict.accepted) {
    verdict.filtered_code = cfg.strip_comments ? std::move(stripped) : sample.code;
  }
  return verdict;
}

FilterResult filter_corpus(const std::vector<RawSample>& samples, const FilterConfig& cfg,
                           int jobs) {
  cfg.validate();
  std::unordered_set<std::string> seen;
  for (const RawSample& s : samples) {
    if (!seen.insert(s.id).second) throw DuplicateIdError(s.id);
  }

  FilterResult result;
  result.verdicts.reserve(samples.size());
  run_ordered<FilterVerdict>(
      samples.size(), jobs, [&](std::size_t i) { return filter_sample(samples[i], cfg); },
      [&](std::size_t i, FilterVerdict& v) {
        if (v.accepted) {
          ++result.report.accepted;
          const RawSample& s = samples[i];
          result.accepted.push_back(FilteredSample{s.id, s.origin, s.code, *v.filtered_code});
        } else {
          ++result.report.rejected;
          for (RejectReason r : v.reasons) ++result.report.reasons[r];
        }
        result.verdicts.push_back(std::move(v));
      });
  return result;
}

RawSample raw_sample_from_json(const nlohmann::json& j) {
  RawSample s;
  s.id = require_string(j, "id");
  s.code = require_string(j, "code");
  s.origin = optional_string(j, "origin").value_or("");
  return s;
}

nlohmann::json to_json(const FilteredSample& s) {
  return {{"id", s.id}, {"origin", s.origin}, {"code", s.code}, {"filtered_code", s.filtered_code}};
}

FilteredSample filtered_sample_from_json(const nlohmann::json& j) {
  FilteredSample s;
  s.id = require_string(j, "id");
  s.code = optional_string(j, "code").value_or("");
  s.origin = optional_string(j, "origin").value_or("");
  s.filtered_code = require_string(j, "filtered_code");
  return s;
}

}  // namespace rtlrefine
