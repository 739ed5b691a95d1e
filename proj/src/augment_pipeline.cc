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

#include <spdlog/spdlog.h>

#include <fstream>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "rtlrefine/jsonl.h"
#include "rtlrefine/worker_pool.h"

namespace rtlrefine {
namespace {

std::string TrimText(std::string_view s) {
  const std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

nlohmann::json DropsToJson(const DropCounts& drops) {
  nlohmann::json j = nlohmann::json::object();
  for (DropReason r : kAllDropReasons) {
    auto it = drops.find(r);
    j[std::string(DropReasonName(r))] = it == drops.end() ? 0 : it->second;
  }
  return j;
}

DropCounts DropsFromJson(const nlohmann::json& j) {
  DropCounts drops;
  for (DropReason r : kAllDropReasons) {
    const std::int64_t v = j.value(std::string(DropReasonName(r)), std::int64_t{0});
    if (v != 0) drops[r] = v;
  }
  return drops;
}

// Rewrites a JSONL file keeping only records whose sample_id is in `keep`.
// Unparsable lines (a write cut short) are dropped.
void PruneJsonl(const std::filesystem::path& path, const std::unordered_set<std::string>& keep) {
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string kept;
  std::string line;
  while (std::getline(in, line)) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    auto id = j.find("sample_id");
    if (id == j.end() || !id->is_string() || !keep.contains(id->get<std::string>())) continue;
    kept += jsonl_line(j);
  }
  in.close();
  write_file_atomic(path, kept);
}

struct ProgressEntry {
  std::string sample_id;
  SampleOutcome summary;  // records left empty; counts only
  std::int64_t corrections = 0;
};

nlohmann::json ProgressToJson(const SampleOutcome& o) {
  return {{"sample_id", o.enhanced.sample_id},
          {"status", o.enhanced.compile_status == AugmentStatus::kPass ? "Pass" : "Fail"},
          {"attempts", o.enhanced.attempts_used},
          {"corrections", static_cast<std::int64_t>(o.corrections.size())},
          {"drops", DropsToJson(o.drops)}};
}

}  // namespace

std::string_view DropReasonName(DropReason r) {
  switch (r) {
    case DropReason::kHeaderChanged: return "HeaderChanged";
    case DropReason::kRecompileFailed: return "RecompileFailed";
    case DropReason::kUnparsableHeader: return "UnparsableHeader";
    case DropReason::kEmptyError: return "EmptyError";
    case DropReason::kNeverFixed: return "NeverFixed";
  }
  return "?";
}

CorrectionBuildResult build_error_correction_dataset(const std::vector<CorrectionCandidate>& candidates,
                                                     Toolchain& toolchain) {
  CorrectionBuildResult result;
  std::unordered_map<std::string, bool> compiles;  // corrected code -> re-check verdict
  for (const CorrectionCandidate& c : candidates) {
    if (TrimText(c.error_message).empty()) {
      ++result.drops[DropReason::kEmptyError];
      continue;
    }
    bool same_headers = false;
    try {
      same_headers = headers_equal(module_headers_of(c.erroneous_code), module_headers_of(c.corrected_code));
    } catch (const LexError&) {
      ++result.drops[DropReason::kUnparsableHeader];
      continue;
    } catch (const MalformedHeaderError&) {
      ++result.drops[DropReason::kUnparsableHeader];
      continue;
    }
    if (!same_headers) {
      ++result.drops[DropReason::kHeaderChanged];
      continue;
    }
    auto it = compiles.find(c.corrected_code);
    if (it == compiles.end()) {
      const CompileResult r = toolchain.compile(SourceText{c.corrected_code, c.sample_id}, {});
      it = compiles.emplace(c.corrected_code, r.status == CompileStatus::kPass).first;
    }
    if (!it->second) {
      ++result.drops[DropReason::kRecompileFailed];
      continue;
    }
    result.records.push_back(c);
  }
  return result;
}

void AugmentConfig::validate() const {
  if (max_fix_iterations < 0) throw std::invalid_argument("max_fix_iterations must be >= 0");
  if (teacher.role != EndpointRole::kTeacher) {
    throw std::invalid_argument("augmentation endpoint '" + teacher.id + "' must have role Teacher");
  }
  params.validate();
}

SampleOutcome augment_sample(const FilteredSample& sample, const AugmentConfig& cfg,
                             LlmGateway& gateway, Toolchain& toolchain,
                             std::optional<std::int64_t> seed) {
  CompletionParams params = cfg.params;
  if (seed) params.seed = seed;
  SampleOutcome out;
  EnhancedRecord& rec = out.enhanced;
  rec.sample_id = sample.id;
  rec.compile_status = AugmentStatus::kFail;

  std::vector<CorrectionCandidate> candidates;
  try {
    const Prompt describe = render_description_prompt(sample.filtered_code);
    rec.description = TrimText(gateway.complete(cfg.teacher, describe, params).text);
    const Prompt generate = render_generation_prompt(rec.description);
    std::string code = extract_code_block(gateway.complete(cfg.teacher, generate, params).text);

    for (;;) {
      rec.final_code = code;
      const CompileResult result = toolchain.compile(SourceText{code, sample.id}, {});
      ++rec.attempts_used;
      if (result.status == CompileStatus::kPass) {
        rec.compile_status = AugmentStatus::kPass;
        break;
      }
      if (result.status != CompileStatus::kSyntaxError) {
        rec.failure = "compile " + std::string(CompileStatusName(result.status));
        break;
      }
      candidates.push_back(CorrectionCandidate{sample.id, rec.description, code, result.raw_output, ""});
      if (rec.attempts_used > cfg.max_fix_iterations) {
        rec.failure = "fix budget exhausted";
        break;
      }
      const Prompt debug = render_debug_prompt(rec.description, code, result.raw_output);
      code = extract_code_block(gateway.complete(cfg.teacher, debug, params).text);
    }
  } catch (const BackendError& e) {
    rec.failure = std::string("TeacherUnavailable: ") + e.what();
  } catch (const NoCodeFoundError& e) {
    rec.failure = std::string("NoCodeFound: ") + e.what();
  } catch (const PreconditionError& e) {
    rec.failure = e.what();
  }

  if (rec.compile_status != AugmentStatus::kPass) {
    if (!candidates.empty()) out.drops[DropReason::kNeverFixed] += static_cast<std::int64_t>(candidates.size());
    return out;
  }
  for (CorrectionCandidate& c : candidates) c.corrected_code = rec.final_code;
  CorrectionBuildResult built = build_error_correction_dataset(candidates, toolchain);
  out.corrections = std::move(built.records);
  out.drops = std::move(built.drops);
  return out;
}

void RunReport::add(const SampleOutcome& outcome) {
  ++samples;
  if (outcome.enhanced.compile_status == AugmentStatus::kPass) {
    if (outcome.enhanced.attempts_used == 1) {
      ++pass_first_try;
    } else {
      ++pass_after_fix;
    }
  } else {
    ++failed;
  }
  corrections_emitted += static_cast<std::int64_t>(outcome.corrections.size());
  for (const auto& [r, n] : outcome.drops) corrections_dropped[r] += n;
}

nlohmann::json RunReport::to_json() const {
  return {{"samples", samples},
          {"pass_first_try", pass_first_try},
          {"pass_after_fix", pass_after_fix},
          {"failed", failed},
          {"corrections_emitted", corrections_emitted},
          {"corrections_dropped_by_reason", DropsToJson(corrections_dropped)}};
}

nlohmann::json to_json(const EnhancedRecord& r) {
  nlohmann::json j = {{"sample_id", r.sample_id},
                      {"description", r.description},
                      {"code", r.final_code},
                      {"compile_status", r.compile_status == AugmentStatus::kPass ? "Pass" : "Fail"},
                      {"attempts", r.attempts_used}};
  if (r.compile_status != AugmentStatus::kPass) j["failure"] = r.failure;
  return j;
}

nlohmann::json to_json(const ErrorCorrectionRecord& r) {
  return {{"sample_id", r.sample_id},
          {"instruction", r.instruction},
          {"erroneous_code", r.erroneous_code},
          {"error_message", r.error_message},
          {"corrected_code", r.corrected_code}};
}

ErrorCorrectionRecord correction_from_json(const nlohmann::json& j) {
  return ErrorCorrectionRecord{require_string(j, "sample_id"), require_string(j, "instruction"),
                               require_string(j, "erroneous_code"), require_string(j, "error_message"),
                               require_string(j, "corrected_code")};
}

RunReport run_augmentation(const std::vector<FilteredSample>& corpus, const AugmentConfig& cfg,
                           LlmGateway& gateway, Toolchain& toolchain,
                           const std::filesystem::path& out_dir, const RunOptions& options) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  const auto enhanced_path = out_dir / kEnhancedFile;
  const auto rejects_path = out_dir / kRejectsFile;
  const auto corrections_path = out_dir / kCorrectionsFile;
  const auto progress_path = out_dir / kProgressFile;

  RunReport report;
  std::unordered_set<std::string> done;
  if (options.resume && std::filesystem::exists(progress_path)) {
    std::ifstream in(progress_path);
    std::string line;
    std::string kept;
    while (std::getline(in, line)) {
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("sample_id")) continue;
      const std::string id = j["sample_id"].get<std::string>();
      if (!done.insert(id).second) continue;
      SampleOutcome summary;
      summary.enhanced.sample_id = id;
      summary.enhanced.compile_status = j.value("status", "Fail") == "Pass" ? AugmentStatus::kPass : AugmentStatus::kFail;
      summary.enhanced.attempts_used = j.value("attempts", 0);
      summary.corrections.resize(static_cast<std::size_t>(j.value("corrections", std::int64_t{0})));
      summary.drops = DropsFromJson(j.value("drops", nlohmann::json::object()));
      report.add(summary);
      kept += jsonl_line(j);
    }
    in.close();
    write_file_atomic(progress_path, kept);
    PruneJsonl(enhanced_path, done);
    PruneJsonl(rejects_path, done);
    PruneJsonl(corrections_path, done);
  }
  const bool append = options.resume;
  JsonlWriter enhanced(enhanced_path, append);
  JsonlWriter rejects(rejects_path, append);
  JsonlWriter corrections(corrections_path, append);
  JsonlWriter progress(progress_path, append && !done.empty());

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!done.contains(corpus[i].id)) todo.push_back(i);
  }
  if (!done.empty()) spdlog::info("resuming: {} samples already done, {} to go", done.size(), todo.size());

  run_ordered<SampleOutcome>(
      todo.size(), options.jobs,
      [&](std::size_t i) {
        std::optional<std::int64_t> seed;
        if (options.base_seed) seed = *options.base_seed + static_cast<std::int64_t>(todo[i]);
        return augment_sample(corpus[todo[i]], cfg, gateway, toolchain, seed);
      },
      [&](std::size_t, SampleOutcome& o) {
        if (o.enhanced.compile_status == AugmentStatus::kPass) {
          enhanced.write(to_json(o.enhanced));
        } else {
          rejects.write(to_json(o.enhanced));
        }
        for (const auto& c : o.corrections) corrections.write(to_json(c));
        enhanced.flush();
        rejects.flush();
        corrections.flush();
        progress.write(ProgressToJson(o));
        progress.flush();
        report.add(o);
      },
      options.stop);

  write_file_atomic(out_dir / kReportFile, report.to_json().dump(2) + "\n");
  return report;
}

}  // namespace rtlrefine
