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

#include <algorithm>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "rtlrefine/jsonl.h"
#include "rtlrefine/worker_pool.h"

namespace rtlrefine {
namespace {

std::string JoinIds(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) {
    if (!s.empty()) s += ", ";
    s += id;
  }
  return s;
}

// Sorting first makes the floating-point sum independent of task order.
double MeanOf(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

void RejectDuplicates(const std::vector<std::string>& ids) {
  std::set<std::string> seen;
  std::vector<std::string> dups;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) dups.push_back(id);
  }
  if (!dups.empty()) throw InvariantViolation("duplicate case ids: " + JoinIds(dups), dups);
}

std::string Percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *v);
  return buf;
}

}  // namespace

InvariantViolation::InvariantViolation(const std::string& what, std::vector<std::string> ids)
    : std::runtime_error(what), ids_(std::move(ids)) {}

double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k) {
  if (k < 1 || k > n || c < 0 || c > n) {
    throw DomainError("pass@k needs 1 <= k <= n and 0 <= c <= n (n=" + std::to_string(n) +
                      ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
  }
  if (k == 1) return static_cast<double>(c) / static_cast<double>(n);
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (std::int64_t i = 0; i < k; ++i) {
    miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  }
  return 1.0 - miss;
}

EvalReport evaluate_generation(const std::vector<GenTask>& tasks, const std::vector<InstructionTraces>& traces,
                               const std::vector<int>& ks, Toolchain& toolchain, int jobs) {
  std::unordered_map<std::string, const InstructionTraces*> by_id;
  for (const auto& t : traces) by_id[t.instruction.id] = &t;

  std::vector<std::string> missing;
  std::int64_t n = -1;
  for (const auto& task : tasks) {
    auto it = by_id.find(task.id);
    if (it == by_id.end() || it->second->traces.empty()) {
      missing.push_back(task.id);
      continue;
    }
    const auto count = static_cast<std::int64_t>(it->second->traces.size());
    if (n < 0) n = count;
    if (count != n) missing.push_back(task.id);
  }
  if (!missing.empty()) {
    throw MissingTracesError("tasks without exactly " + std::to_string(std::max<std::int64_t>(n, 0)) +
                             " traces: " + JoinIds(missing));
  }
  for (int k : ks) {
    if (!tasks.empty() && (k < 1 || k > n)) {
      throw DomainError("k=" + std::to_string(k) + " is outside 1.." + std::to_string(n));
    }
  }

  struct Job {
    std::size_t task;
    const ReflectionTrace* trace;
  };
  std::vector<Job> work;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (const auto& tr : by_id[tasks[i].id]->traces) work.push_back({i, &tr});
  }

  std::vector<EvalCounts> counts(tasks.size(), EvalCounts{n, 0, 0});
  run_ordered<std::pair<bool, bool>>(
      work.size(), jobs,
      [&](std::size_t j) {
        const ReflectionTrace& tr = *work[j].trace;
        const ReflectionIteration* last = tr.last();
        if (tr.final_status != ReflectionStatus::kPass || last == nullptr) return std::pair{false, false};
        const GenTask& task = tasks[work[j].task];
        const bool ok = toolchain.run_testbench(SourceText{last->code, task.id}, task.testbench).passed();
        return std::pair{true, ok};
      },
      [&](std::size_t j, std::pair<bool, bool>& r) {
        EvalCounts& c = counts[work[j].task];
        c.c_syntax += r.first ? 1 : 0;
        c.c_func += r.second ? 1 : 0;
      },
      nullptr);

  EvalReport report;
  report.ks = ks;
  for (std::size_t i = 0; i < tasks.size(); ++i) report.tasks.push_back({tasks[i].id, counts[i]});
  std::sort(report.tasks.begin(), report.tasks.end(),
            [](const TaskCounts& a, const TaskCounts& b) { return a.id < b.id; });
  for (int k : ks) {
    if (report.tasks.empty()) continue;
    std::vector<double> func;
    std::vector<double> syn;
    for (const auto& t : report.tasks) {
      func.push_back(pass_at_k(t.counts.n, t.counts.c_func, k));
      syn.push_back(pass_at_k(t.counts.n, t.counts.c_syntax, k));
    }
    report.pass_at_k[k] = MeanOf(std::move(func));
    report.syntax_pass_at_k[k] = MeanOf(std::move(syn));
  }
  return report;
}

FixOutcome fix_once(const FixCase& c, const FixerConfig& cfg, LlmGateway& gateway, Toolchain& toolchain) {
  FixOutcome out;
  out.id = c.id;
  try {
    const Prompt prompt = render_debug_prompt(c.instruction, c.erroneous_code.content, c.error_message);
    out.corrected_code = extract_code_block(gateway.complete(cfg.fixer, prompt, cfg.params).text);
  } catch (const BackendError& e) {
    out.note = std::string(BackendErrorKindName(e.kind())) + ": " + e.what();
    return out;
  } catch (const NoCodeFoundError& e) {
    out.note = std::string("NoCodeFound: ") + e.what();
    return out;
  } catch (const PreconditionError& e) {
    out.note = e.what();
    return out;
  }
  const SourceText code{out.corrected_code, c.id};
  const CompileResult compiled = toolchain.compile(code, {});
  out.syntactic = compiled.status == CompileStatus::kPass;
  if (!out.syntactic) {
    out.note = "compile " + std::string(CompileStatusName(compiled.status));
    return out;
  }
  const TestbenchResult tb = toolchain.run_testbench(code, c.testbench);
  out.functional = tb.passed();
  if (!out.functional) {
    out.note = tb.sim ? "simulation " + std::string(SimStatusName(tb.sim->status))
                      : "testbench compile " + std::string(CompileStatusName(tb.compile.status));
  }
  return out;
}

EvalReport evaluate_fix(const std::vector<FixCase>& cases, const FixerConfig& cfg, LlmGateway& gateway,
                        Toolchain& toolchain, int jobs) {
  if (cfg.fixer.role != EndpointRole::kFix) {
    throw std::invalid_argument("fixer endpoint '" + cfg.fixer.id + "' must have role Fix");
  }
  EvalReport report;
  run_ordered<FixOutcome>(
      cases.size(), jobs, [&](std::size_t i) { return fix_once(cases[i], cfg, gateway, toolchain); },
      [&](std::size_t, FixOutcome& o) { report.fix_cases.push_back(std::move(o)); }, nullptr);
  std::sort(report.fix_cases.begin(), report.fix_cases.end(),
            [](const FixOutcome& a, const FixOutcome& b) { return a.id < b.id; });
  if (!cases.empty()) {
    std::int64_t syn = 0;
    std::int64_t func = 0;
    for (const auto& o : report.fix_cases) {
      syn += o.syntactic ? 1 : 0;
      func += o.functional ? 1 : 0;
    }
    const double total = static_cast<double>(cases.size());
    report.syntactic_rate = 100.0 * static_cast<double>(syn) / total;
    report.functional_rate = 100.0 * static_cast<double>(func) / total;
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  if (!tasks.empty() || !ks.empty()) {
    nlohmann::json per_task = nlohmann::json::array();
    for (const auto& t : tasks) {
      nlohmann::json row = {{"id", t.id}, {"n", t.counts.n}, {"c_syntax", t.counts.c_syntax},
                            {"c_func", t.counts.c_func}};
      nlohmann::json func = nlohmann::json::object();
      nlohmann::json syn = nlohmann::json::object();
      for (int k : ks) {
        func[std::to_string(k)] = rtlrefine::pass_at_k(t.counts.n, t.counts.c_func, k);
        syn[std::to_string(k)] = rtlrefine::pass_at_k(t.counts.n, t.counts.c_syntax, k);
      }
      row["pass_at_k"] = std::move(func);
      row["syntax_pass_at_k"] = std::move(syn);
      per_task.push_back(std::move(row));
    }
    nlohmann::json agg = nlohmann::json::object();
    nlohmann::json agg_syn = nlohmann::json::object();
    for (const auto& [k, v] : pass_at_k) agg[std::to_string(k)] = v;
    for (const auto& [k, v] : syntax_pass_at_k) agg_syn[std::to_string(k)] = v;
    j["ks"] = ks;
    j["tasks"] = std::move(per_task);
    j["pass_at_k"] = std::move(agg);
    j["syntax_pass_at_k"] = std::move(agg_syn);
  } else {
    nlohmann::json per_case = nlohmann::json::array();
    for (const auto& o : fix_cases) {
      nlohmann::json row = {{"id", o.id}, {"syntactic", o.syntactic}, {"functional", o.functional},
                            {"corrected_code", o.corrected_code}};
      if (!o.note.empty()) row["note"] = o.note;
      per_case.push_back(std::move(row));
    }
    j["cases"] = std::move(per_case);
    j["case_count"] = fix_cases.size();
    j["syntactic_rate"] = syntactic_rate ? nlohmann::json(*syntactic_rate) : nlohmann::json(nullptr);
    j["functional_rate"] = functional_rate ? nlohmann::json(*functional_rate) : nlohmann::json(nullptr);
  }
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  char buf[256];
  if (!tasks.empty() || !ks.empty()) {
    std::snprintf(buf, sizeof buf, "%-32s %6s %9s %7s\n", "task", "n", "c_syntax", "c_func");
    os << buf;
    for (const auto& t : tasks) {
      std::snprintf(buf, sizeof buf, "%-32s %6lld %9lld %7lld\n", t.id.c_str(),
                    static_cast<long long>(t.counts.n), static_cast<long long>(t.counts.c_syntax),
                    static_cast<long long>(t.counts.c_func));
      os << buf;
    }
    os << '\n';
    std::snprintf(buf, sizeof buf, "%-10s %12s %12s\n", "metric", "functional", "syntax");
    os << buf;
    for (int k : ks) {
      auto f = pass_at_k.find(k);
      auto s = syntax_pass_at_k.find(k);
      std::snprintf(buf, sizeof buf, "%-10s %12.4f %12.4f\n", ("pass@" + std::to_string(k)).c_str(),
                    f == pass_at_k.end() ? 0.0 : f->second, s == syntax_pass_at_k.end() ? 0.0 : s->second);
      os << buf;
    }
    return os.str();
  }
  std::snprintf(buf, sizeof buf, "%-32s %10s %10s\n", "case", "syntactic", "functional");
  os << buf;
  for (const auto& o : fix_cases) {
    std::snprintf(buf, sizeof buf, "%-32s %10s %10s\n", o.id.c_str(), o.syntactic ? "yes" : "no",
                  o.functional ? "yes" : "no");
    os << buf;
  }
  os << "\ncases: " << fix_cases.size() << "  syntactic: " << Percent(syntactic_rate)
     << "  functional: " << Percent(functional_rate) << '\n';
  return os.str();
}

std::vector<FixCase> load_fix_benchmark(const std::filesystem::path& path, Toolchain* toolchain, int jobs) {
  std::vector<FixCase> cases = read_jsonl<FixCase>(path, [](const nlohmann::json& j) {
    FixCase c;
    c.id = require_string(j, "id");
    c.instruction = require_string(j, "instruction");
    c.erroneous_code = SourceText{require_string(j, "erroneous_code"), c.id};
    c.error_message = require_string(j, "error_message");
    c.testbench = SourceText{require_string(j, "testbench"), c.id + "/testbench"};
    return c;
  });
  std::vector<std::string> ids;
  for (const auto& c : cases) ids.push_back(c.id);
  RejectDuplicates(ids);
  if (toolchain != nullptr) {
    std::vector<std::string> compiling;
    run_ordered<bool>(
        cases.size(), jobs,
        [&](std::size_t i) { return toolchain->compile(cases[i].erroneous_code, {}).status == CompileStatus::kPass; },
        [&](std::size_t i, bool& ok) {
          if (ok) compiling.push_back(cases[i].id);
        },
        nullptr);
    if (!compiling.empty()) {
      throw InvariantViolation("erroneous_code compiles for cases: " + JoinIds(compiling), compiling);
    }
  }
  return cases;
}

std::vector<GenTask> load_gen_benchmark(const std::filesystem::path& path, Toolchain* toolchain, int jobs) {
  std::vector<GenTask> tasks = read_jsonl<GenTask>(path, [](const nlohmann::json& j) {
    GenTask t;
    t.id = require_string(j, "id");
    t.instruction = require_string(j, "instruction");
    t.testbench = SourceText{require_string(j, "testbench"), t.id + "/testbench"};
    if (auto ref = optional_string(j, "reference")) t.reference = SourceText{*ref, t.id + "/reference"};
    return t;
  });
  std::vector<std::string> ids;
  for (const auto& t : tasks) ids.push_back(t.id);
  RejectDuplicates(ids);
  if (toolchain != nullptr) {
    std::vector<std::string> broken;
    run_ordered<bool>(
        tasks.size(), jobs,
        [&](std::size_t i) {
          if (!tasks[i].reference) return true;
          return toolchain->run_testbench(*tasks[i].reference, tasks[i].testbench).compile.status ==
                 CompileStatus::kPass;
        },
        [&](std::size_t i, bool& ok) {
          if (!ok) broken.push_back(tasks[i].id);
        },
        nullptr);
    if (!broken.empty()) {
      throw InvariantViolation("reference does not compile with its testbench: " + JoinIds(broken), broken);
    }
  }
  return tasks;
}

}  // namespace rtlrefine
