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


#include "cli.h"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "rtlrefine/augment_pipeline.h"
#include "rtlrefine/compile_harness.h"
#include "rtlrefine/config.h"
#include "rtlrefine/corpus_filter.h"
#include "rtlrefine/digest.h"
#include "rtlrefine/evaluator.h"
#include "rtlrefine/jsonl.h"
#include "rtlrefine/llm_gateway.h"
#include "rtlrefine/reflect_engine.h"
#include "rtlrefine/worker_pool.h"

namespace rtlrefine::cli {
namespace fs = std::filesystem;

std::atomic<bool>& stop_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

constexpr std::string_view kCallLogFile = "call-log.jsonl";
constexpr std::string_view kConfigSnapshotFile = "resolved-config.json";
constexpr std::string_view kManifestFile = "run-manifest.json";

// Failure with a chosen exit code.
struct ExitWith : std::runtime_error {
  ExitWith(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

struct GlobalFlags {
  std::string config;
  std::optional<int> jobs;
  std::optional<std::int64_t> seed;
  bool keep_artifacts = false;
  std::string mock_llm;
  std::string mock_toolchain;
  bool quiet = false;
};

struct StageFlags {
  std::string input;
  std::string output;
  std::string report;
  std::string traces;
  std::string trace_log;
  bool resume = false;
  bool no_reflect = false;
  std::optional<int> n;
  std::vector<int> ks;
};

std::string Timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path DirOf(const fs::path& file) {
  fs::path dir = file.parent_path();
  return dir.empty() ? fs::path(".") : dir;
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

std::int64_t CountLines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return 0;
  return std::count(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>(), '\n');
}

// Everything a stage needs, built from the config plus flag overrides.
class Session {
 public:
  Session(std::string command, const GlobalFlags& g) : command_(std::move(command)), flags_(g) {
    started_ = Timestamp();
    if (!g.config.empty()) cfg_ = load_run_config(g.config);
    if (g.jobs) cfg_.jobs = *g.jobs;
    if (g.seed) cfg_.seed = *g.seed;
    if (g.keep_artifacts) cfg_.toolchain.keep_artifacts = true;
    if (!g.mock_llm.empty() && cfg_.llm.endpoints.empty()) {
      for (auto [id, role] : {std::pair{"teacher", EndpointRole::kTeacher}, std::pair{"gen", EndpointRole::kGen},
                              std::pair{"fix", EndpointRole::kFix}}) {
        cfg_.llm.endpoints.push_back(BackendEndpoint{id, "mock://", id, "", role});
      }
    }
  }

  RunConfig& config() { return cfg_; }

  // Validates the final config and opens backends. Call after overrides.
  void open(const fs::path& out_dir, bool append_log = false) {
    cfg_.validate();
    out_dir_ = out_dir;
    EnsureDir(out_dir_);
    if (flags_.mock_llm.empty()) {
      backend_ = std::make_shared<HttpBackend>(cfg_.llm.http_timeout_s);
    } else {
      backend_ = MockBackend::from_file(flags_.mock_llm);
    }
    if (flags_.mock_toolchain.empty()) {
      toolchain_ = std::make_shared<ProcessToolchain>(cfg_.toolchain);
    } else {
      toolchain_ = MockToolchain::from_file(flags_.mock_toolchain, cfg_.toolchain);
    }
    const fs::path log_path = out_dir_ / kCallLogFile;
    const std::int64_t first = append_log ? CountLines(log_path) + 1 : 1;
    log_ = std::make_shared<CallLog>(log_path, append_log, first);
    gateway_ = std::make_unique<LlmGateway>(backend_, cfg_.llm.gateway, log_);
    write_file_atomic(out_dir_ / kConfigSnapshotFile, to_json(cfg_).dump(2) + "\n");
  }

  void require_reachable(const BackendEndpoint& e) {
    if (!gateway_->probe(e)) {
      throw ExitWith(kExitUnreachable, "endpoint '" + e.id + "' (" + e.base_url + ") is unreachable");
    }
  }

  LlmGateway& gateway() { return *gateway_; }
  Toolchain& toolchain() { return *toolchain_; }

  void add_output(const fs::path& p) { outputs_.push_back(p.string()); }

  void finish(int exit_code) {
    if (out_dir_.empty()) return;
    log_->flush();
    nlohmann::json m = {{"command", command_},
                        {"started_at", started_},
                        {"finished_at", Timestamp()},
                        {"exit_code", exit_code},
                        {"config_sha256", sha256_hex(to_json(cfg_).dump())},
                        {"llm_calls", log_->size()},
                        {"mock_llm", flags_.mock_llm},
                        {"mock_toolchain", flags_.mock_toolchain},
                        {"outputs", outputs_}};
    write_file_atomic(out_dir_ / kManifestFile, m.dump(2) + "\n");
  }

 private:
  std::string command_;
  GlobalFlags flags_;
  RunConfig cfg_;
  std::string started_;
  fs::path out_dir_;
  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<Toolchain> toolchain_;
  std::shared_ptr<CallLog> log_;
  std::unique_ptr<LlmGateway> gateway_;
  std::vector<std::string> outputs_;
};

std::string Pick(const std::string& flag, const std::string& fallback, const char* what) {
  if (!flag.empty()) return flag;
  if (!fallback.empty()) return fallback;
  throw ConfigError(std::string("no ") + what + " given (argument or paths in config)");
}

void WriteJsonl(const fs::path& path, const std::vector<nlohmann::json>& rows) {
  std::string text;
  for (const auto& r : rows) text += jsonl_line(r);
  write_file_atomic(path, text);
}

int Interrupted(Session& s) {
  spdlog::warn("interrupted; completed work is saved");
  s.finish(kExitInterrupted);
  return kExitInterrupted;
}

void ApplyEvalOverrides(RunConfig& cfg, const StageFlags& f) {
  if (f.n) cfg.eval.n = *f.n;
  if (!f.ks.empty()) cfg.eval.ks = f.ks;
  if (f.no_reflect) cfg.reflect.max_iterations = 0;
}

int CmdFilter(const GlobalFlags& g, const StageFlags& f, std::ostream& out) {
  Session s("filter", g);
  RunConfig& cfg = s.config();
  const fs::path input = Pick(f.input, cfg.paths.input, "input");
  const fs::path output = Pick(f.output, cfg.paths.output, "output");
  cfg.validate();
  const auto samples = read_jsonl<RawSample>(input, raw_sample_from_json);
  const FilterResult result = filter_corpus(samples, cfg.filter, cfg.jobs);

  s.open(DirOf(output));
  std::vector<nlohmann::json> rows;
  for (const auto& a : result.accepted) rows.push_back(to_json(a));
  WriteJsonl(output, rows);
  const fs::path report = f.report.empty() ? DirOf(output) / "filter-report.json" : fs::path(f.report);
  write_file_atomic(report, result.report.to_json().dump(2) + "\n");
  s.add_output(output);
  s.add_output(report);
  out << "accepted " << result.report.accepted << " of " << samples.size() << " samples\n";
  s.finish(kExitOk);
  return kExitOk;
}

int CmdAugment(const GlobalFlags& g, const StageFlags& f, std::ostream& out) {
  Session s("augment", g);
  RunConfig& cfg = s.config();
  const fs::path input = Pick(f.input, cfg.paths.input, "input");
  const fs::path out_dir = Pick(f.output, cfg.paths.output, "output directory");
  cfg.validate();
  const AugmentConfig acfg = cfg.augment_config();
  const auto corpus = read_jsonl<FilteredSample>(input, filtered_sample_from_json);

  s.open(out_dir, f.resume);
  s.require_reachable(acfg.teacher);
  RunOptions opts;
  opts.jobs = cfg.jobs;
  opts.resume = f.resume;
  opts.base_seed = cfg.seed;
  opts.stop = &stop_flag();
  const RunReport report = run_augmentation(corpus, acfg, s.gateway(), s.toolchain(), out_dir, opts);
  for (auto name : {kEnhancedFile, kRejectsFile, kCorrectionsFile, kReportFile, kCallLogFile}) {
    s.add_output(out_dir / name);
  }
  if (stop_flag().load()) return Interrupted(s);
  out << "samples " << report.samples << ", pass first try " << report.pass_first_try << ", pass after fix "
      << report.pass_after_fix << ", failed " << report.failed << ", corrections " << report.corrections_emitted
      << "\n";
  s.finish(kExitOk);
  return kExitOk;
}

std::vector<Instruction> ReadInstructions(const fs::path& path) {
  return read_jsonl<Instruction>(path, [](const nlohmann::json& j) {
    return Instruction{require_string(j, "id"), require_string(j, "instruction")};
  });
}

std::vector<InstructionTraces> Generate(Session& s, const std::vector<Instruction>& instructions, bool reflect) {
  RunConfig& cfg = s.config();
  const ReflectionConfig rcfg = cfg.reflection_config();
  s.require_reachable(rcfg.gen);
  if (reflect && rcfg.max_iterations > 0) s.require_reachable(rcfg.fix);
  BatchOptions opts;
  opts.jobs = cfg.jobs;
  opts.reflect = reflect;
  opts.base_seed = cfg.seed;
  opts.stop = &stop_flag();
  return batch_generate(instructions, rcfg, cfg.eval.n, s.gateway(), s.toolchain(), opts);
}

void WriteTraces(Session& s, const std::vector<InstructionTraces>& traces, const fs::path& path,
                 const fs::path& log_path) {
  std::vector<nlohmann::json> rows;
  std::vector<nlohmann::json> log_rows;
  for (const auto& t : traces) {
    rows.push_back(to_json(t));
    for (auto& line : trace_log_lines(t)) log_rows.push_back(std::move(line));
  }
  WriteJsonl(path, rows);
  WriteJsonl(log_path, log_rows);
  s.add_output(path);
  s.add_output(log_path);
}

int CmdGenerate(const GlobalFlags& g, const StageFlags& f, std::ostream& out) {
  Session s("generate", g);
  RunConfig& cfg = s.config();
  ApplyEvalOverrides(cfg, f);
  const fs::path input = Pick(f.input, cfg.paths.input, "input");
  const fs::path output = Pick(f.output, cfg.paths.output, "output");
  cfg.validate();
  const auto instructions = ReadInstructions(input);
  s.open(DirOf(output));
  const auto traces = Generate(s, instructions, !f.no_reflect);
  if (stop_flag().load()) return Interrupted(s);
  const fs::path log_path = f.trace_log.empty() ? DirOf(output) / "trace-log.jsonl" : fs::path(f.trace_log);
  WriteTraces(s, traces, output, log_path);
  std::int64_t pass = 0;
  std::int64_t total = 0;
  for (const auto& t : traces) {
    for (const auto& tr : t.traces) {
      ++total;
      pass += tr.final_status == ReflectionStatus::kPass ? 1 : 0;
    }
  }
  out << "generated " << total << " samples for " << traces.size() << " instructions, " << pass
      << " compile\n";
  s.finish(kExitOk);
  return kExitOk;
}

int CmdFix(const GlobalFlags& g, const StageFlags& f, std::ostream& out) {
  Session s("fix", g);
  RunConfig& cfg = s.config();
  const fs::path input = Pick(f.input, cfg.paths.input, "input");
  const fs::path output = Pick(f.output, cfg.paths.output, "output");
  cfg.validate();
  const FixerConfig fcfg = cfg.fixer_config();
  const auto cases = read_jsonl<FixCase>(input, [](const nlohmann::json& j) {
    FixCase c;
    c.id = require_string(j, "id");
    c.instruction = require_string(j, "instruction");
    c.erroneous_code = SourceText{require_string(j, "erroneous_code"), c.id};
    c.error_message = require_string(j, "error_message");
    return c;
  });
  s.open(DirOf(output));
  s.require_reachable(fcfg.fixer);

  std::vector<nlohmann::json> rows;
  std::int64_t compiled = 0;
  run_ordered<nlohmann::json>(
      cases.size(), cfg.jobs,
      [&](std::size_t i) {
        const FixCase& c = cases[i];
        nlohmann::json row = {{"id", c.id}};
        try {
          const Prompt p = render_debug_prompt(c.instruction, c.erroneous_code.content, c.error_message);
          const std::string code = extract_code_block(s.gateway().complete(fcfg.fixer, p, fcfg.params).text);
          const CompileResult r = s.toolchain().compile(SourceText{code, c.id}, {});
          row["corrected_code"] = code;
          row["compile"] = to_json(r);
        } catch (const BackendError& e) {
          row["note"] = e.what();
        } catch (const NoCodeFoundError& e) {
          row["note"] = e.what();
        } catch (const PreconditionError& e) {
          row["note"] = e.what();
        }
        return row;
      },
      [&](std::size_t, nlohmann::json& row) {
        if (row.contains("compile") && row["compile"]["status"] == "Pass") ++compiled;
        rows.push_back(std::move(row));
      },
      &stop_flag());
  if (stop_flag().load()) return Interrupted(s);
  WriteJsonl(output, rows);
  s.add_output(output);
  out << "fixed " << compiled << " of " << cases.size() << " cases\n";
  s.finish(kExitOk);
  return kExitOk;
}

fs::path ReportPath(const StageFlags& f, const RunConfig& cfg, const char* name) {
  if (!f.report.empty()) return f.report;
  if (!f.output.empty()) return fs::path(f.output) / name;
  if (!cfg.paths.output.empty()) return fs::path(cfg.paths.output) / name;
  return name;
}

int CmdEvalGen(const GlobalFlags& g, const StageFlags& f, std::ostream& out) {
  Session s("eval-gen", g);
  RunConfig& cfg = s.config();
  ApplyEvalOverrides(cfg, f);
  const fs::path input = Pick(f.input, cfg.paths.input, "benchmark");
  const fs::path report_path = ReportPath(f, cfg, "eval-gen-report.json");
  cfg.validate();
  s.open(DirOf(report_path));
  const auto tasks = load_gen_benchmark(input, &s.toolchain(), cfg.jobs);
  std::vector<InstructionTraces> traces;
  if (!f.traces.empty()) {
    traces = read_jsonl<InstructionTraces>(f.traces, instruction_traces_from_json);
  } else {
    std::vector<Instruction> instructions;
    for (const auto& t : tasks) instructions.push_back({t.id, t.instruction});
    traces = Generate(s, instructions, !f.no_reflect);
    if (stop_flag().load()) return Interrupted(s);
    const fs::path dir = DirOf(report_path);
    WriteTraces(s, traces, dir / "traces.jsonl", dir / "trace-log.jsonl");
  }
  const EvalReport report = evaluate_generation(tasks, traces, cfg.eval.ks, s.toolchain(), cfg.jobs);
  write_file_atomic(report_path, report.to_json().dump(2) + "\n");
  s.add_output(report_path);
  out << report.to_table();
  s.finish(kExitOk);
  return kExitOk;
}

int CmdEvalFix(const GlobalFlags& g, const StageFlags& f, std::ostream& out) {
  Session s("eval-fix", g);
  RunConfig& cfg = s.config();
  const fs::path input = Pick(f.input, cfg.paths.input, "benchmark");
  const fs::path report_path = ReportPath(f, cfg, "eval-fix-report.json");
  cfg.validate();
  const FixerConfig fcfg = cfg.fixer_config();
  s.open(DirOf(report_path));
  const auto cases = load_fix_benchmark(input, &s.toolchain(), cfg.jobs);
  spdlog::info("loaded {} fix cases", cases.size());
  s.require_reachable(fcfg.fixer);
  const EvalReport report = evaluate_fix(cases, fcfg, s.gateway(), s.toolchain(), cfg.jobs);
  write_file_atomic(report_path, report.to_json().dump(2) + "\n");
  s.add_output(report_path);
  out << report.to_table();
  s.finish(kExitOk);
  return kExitOk;
}

class ScopedLogger {
 public:
  ScopedLogger(std::ostream& err, bool quiet) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("rtlrefine", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(quiet ? spdlog::level::warn : spdlog::level::info);
    spdlog::set_default_logger(logger);
  }
  ~ScopedLogger() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verilog dataset curation, self-repairing generation and pass@k evaluation"};
  app.name("rtlrefine");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  StageFlags f;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--jobs", g.jobs, "Worker threads (overrides config)")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Base seed (overrides config)");
  app.add_flag("--keep-artifacts", g.keep_artifacts, "Keep toolchain working directories");
  app.add_option("--mock-llm", g.mock_llm, "Scripted model responses (JSON) instead of HTTP endpoints");
  app.add_option("--mock-toolchain", g.mock_toolchain, "Scripted toolchain outcomes (JSON) instead of iverilog");
  app.add_flag("--quiet", g.quiet, "Only log warnings and errors");

  auto* filter = app.add_subcommand("filter", "Filter a raw corpus by size, density and required keywords");
  filter->add_option("input", f.input, "Raw corpus JSONL {id, code, origin?}");
  filter->add_option("output", f.output, "Accepted samples JSONL");
  filter->add_option("--report", f.report, "Filter report path (default: filter-report.json beside output)");

  auto* augment = app.add_subcommand("augment", "Describe, regenerate and repair filtered samples");
  augment->add_option("input", f.input, "Filtered corpus JSONL");
  augment->add_option("output", f.output, "Output directory");
  augment->add_flag("--resume", f.resume, "Continue an interrupted run in the same directory");

  auto* generate = app.add_subcommand("generate", "Generate code for instructions with compiler-driven repair");
  generate->add_option("input", f.input, "Instructions JSONL {id, instruction}");
  generate->add_option("output", f.output, "Traces JSONL");
  generate->add_option("--n", f.n, "Samples per instruction (default 10)")->check(CLI::PositiveNumber);
  generate->add_flag("--no-reflect", f.no_reflect, "Single-shot generation without repair rounds");
  generate->add_option("--trace-log", f.trace_log, "Per-iteration log (default: trace-log.jsonl beside output)");

  auto* fix = app.add_subcommand("fix", "One repair attempt per erroneous sample");
  fix->add_option("input", f.input, "Cases JSONL {id, instruction, erroneous_code, error_message}");
  fix->add_option("output", f.output, "Repaired code JSONL");

  auto* eval_gen = app.add_subcommand("eval-gen", "pass@k over a generation benchmark");
  eval_gen->add_option("input", f.input, "Benchmark JSONL {id, instruction, testbench, reference?}");
  eval_gen->add_option("--traces", f.traces, "Reuse traces from `generate` instead of generating");
  eval_gen->add_option("--n", f.n, "Samples per task (default 10)")->check(CLI::PositiveNumber);
  eval_gen->add_option("--k", f.ks, "Comma-separated k values (default 1,5,10)")->delimiter(',');
  eval_gen->add_flag("--no-reflect", f.no_reflect, "Single-shot generation without repair rounds");
  eval_gen->add_option("--report", f.report, "Report JSON path");
  eval_gen->add_option("--output", f.output, "Directory for the report when --report is not given");

  auto* eval_fix = app.add_subcommand("eval-fix", "Syntactic and functional repair rates over a fix benchmark");
  eval_fix->add_option("input", f.input, "Benchmark JSONL {id, instruction, erroneous_code, error_message, testbench}");
  eval_fix->add_option("--report", f.report, "Report JSON path");
  eval_fix->add_option("--output", f.output, "Directory for the report when --report is not given");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const bool top = app.get_subcommands().empty();
    out << (top ? app.help("", CLI::AppFormatMode::All) : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  ScopedLogger logger(err, g.quiet);
  stop_flag().store(false);
  auto fail = [&](int code, const std::string& what) {
    spdlog::error("{}", what);
    return code;
  };
  try {
    if (*filter) return CmdFilter(g, f, out);
    if (*augment) return CmdAugment(g, f, out);
    if (*generate) return CmdGenerate(g, f, out);
    if (*fix) return CmdFix(g, f, out);
    if (*eval_gen) return CmdEvalGen(g, f, out);
    if (*eval_fix) return CmdEvalFix(g, f, out);
  } catch (const ExitWith& e) {
    return fail(e.code, e.what());
  } catch (const ConfigError& e) {
    return fail(kExitConfig, std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    return fail(kExitConfig, e.what());
  } catch (const IoError& e) {
    return fail(kExitIo, e.what());
  } catch (const SchemaError& e) {
    return fail(kExitIo, e.what());
  } catch (const InvariantViolation& e) {
    return fail(kExitInvariant, e.what());
  } catch (const MissingTracesError& e) {
    return fail(kExitInvariant, e.what());
  } catch (const DuplicateIdError& e) {
    return fail(kExitInvariant, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitConfig, e.what());
  } catch (const std::exception& e) {
    return fail(kExitFailure, e.what());
  }
  return kExitFailure;
}

}  // namespace rtlrefine::cli
