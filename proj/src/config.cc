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


#include "rtlrefine/config.h"

#include <set>
#include <utility>

#include "rtlrefine/jsonl.h"

namespace rtlrefine {
namespace {

const nlohmann::json& Section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json kEmpty = nlohmann::json::object();
  auto it = j.find(key);
  if (it == j.end()) return kEmpty;
  if (!it->is_object()) throw ConfigError(std::string("\"") + key + "\" must be an object");
  return *it;
}

FilterConfig FilterFromJson(const nlohmann::json& j) {
  reject_unknown_keys(j, {"max_lines", "max_tokens", "max_avg_tokens_per_line", "strip_comments"}, "filter");
  FilterConfig f;
  f.max_lines = j.value("max_lines", f.max_lines);
  f.max_tokens = j.value("max_tokens", f.max_tokens);
  f.max_avg_tokens_per_line = j.value("max_avg_tokens_per_line", f.max_avg_tokens_per_line);
  f.strip_comments = j.value("strip_comments", f.strip_comments);
  return f;
}

nlohmann::json ToJson(const FilterConfig& f) {
  return {{"max_lines", f.max_lines},
          {"max_tokens", f.max_tokens},
          {"max_avg_tokens_per_line", f.max_avg_tokens_per_line},
          {"strip_comments", f.strip_comments}};
}

GatewayOptions GatewayFromJson(const nlohmann::json& j) {
  reject_unknown_keys(j, {"max_attempts", "initial_backoff_ms", "backoff_multiplier", "max_backoff_ms",
                          "max_in_flight", "max_requests_per_second"},
                      "llm.gateway");
  GatewayOptions g;
  g.retry.max_attempts = j.value("max_attempts", g.retry.max_attempts);
  g.retry.initial_backoff_ms = j.value("initial_backoff_ms", g.retry.initial_backoff_ms);
  g.retry.multiplier = j.value("backoff_multiplier", g.retry.multiplier);
  g.retry.max_backoff_ms = j.value("max_backoff_ms", g.retry.max_backoff_ms);
  g.max_in_flight = j.value("max_in_flight", g.max_in_flight);
  g.max_requests_per_second = j.value("max_requests_per_second", g.max_requests_per_second);
  return g;
}

nlohmann::json ToJson(const GatewayOptions& g) {
  return {{"max_attempts", g.retry.max_attempts},
          {"initial_backoff_ms", g.retry.initial_backoff_ms},
          {"backoff_multiplier", g.retry.multiplier},
          {"max_backoff_ms", g.retry.max_backoff_ms},
          {"max_in_flight", g.max_in_flight},
          {"max_requests_per_second", g.max_requests_per_second}};
}

std::optional<CompletionParams> OptionalParams(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return params_from_json(*it);
}

nlohmann::json OptionalParamsJson(const std::optional<CompletionParams>& p) {
  return p ? to_json(*p) : nlohmann::json(nullptr);
}

RunConfig FromJsonUnchecked(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown_keys(j, {"filter", "llm", "toolchain", "augment", "reflect", "eval", "paths", "seed", "jobs"},
                      "config");
  RunConfig c;
  c.filter = FilterFromJson(Section(j, "filter"));

  const nlohmann::json& llm = Section(j, "llm");
  reject_unknown_keys(llm, {"endpoints", "params", "gateway", "http_timeout_s"}, "llm");
  if (llm.contains("endpoints")) {
    if (!llm["endpoints"].is_array()) throw ConfigError("llm.endpoints must be an array");
    for (const auto& e : llm["endpoints"]) c.llm.endpoints.push_back(endpoint_from_json(e));
  }
  if (llm.contains("params")) c.llm.params = params_from_json(llm["params"]);
  c.llm.gateway = GatewayFromJson(Section(llm, "gateway"));
  c.llm.http_timeout_s = llm.value("http_timeout_s", c.llm.http_timeout_s);

  if (j.contains("toolchain")) c.toolchain = toolchain_config_from_json(Section(j, "toolchain"));

  const nlohmann::json& aug = Section(j, "augment");
  reject_unknown_keys(aug, {"max_fix_iterations", "teacher", "params"}, "augment");
  c.augment.max_fix_iterations = aug.value("max_fix_iterations", c.augment.max_fix_iterations);
  c.augment.teacher = aug.value("teacher", std::string());
  c.augment.params = OptionalParams(aug, "params");

  const nlohmann::json& ref = Section(j, "reflect");
  reject_unknown_keys(ref, {"max_iterations", "gen", "fix", "params_gen", "params_fix"}, "reflect");
  c.reflect.max_iterations = ref.value("max_iterations", c.reflect.max_iterations);
  c.reflect.gen = ref.value("gen", std::string());
  c.reflect.fix = ref.value("fix", std::string());
  c.reflect.params_gen = OptionalParams(ref, "params_gen");
  c.reflect.params_fix = OptionalParams(ref, "params_fix");

  const nlohmann::json& ev = Section(j, "eval");
  reject_unknown_keys(ev, {"n", "ks", "fixer", "params"}, "eval");
  c.eval.n = ev.value("n", c.eval.n);
  if (ev.contains("ks")) c.eval.ks = ev["ks"].get<std::vector<int>>();
  c.eval.fixer = ev.value("fixer", std::string());
  c.eval.params = OptionalParams(ev, "params");

  const nlohmann::json& paths = Section(j, "paths");
  reject_unknown_keys(paths, {"input", "output"}, "paths");
  c.paths.input = paths.value("input", std::string());
  c.paths.output = paths.value("output", std::string());

  c.seed = j.value("seed", c.seed);
  c.jobs = j.value("jobs", c.jobs);
  return c;
}

}  // namespace

void RunConfig::validate() const {
  try {
    filter.validate();
    toolchain.validate();
    std::set<std::string> ids;
    for (const auto& e : llm.endpoints) {
      if (e.id.empty()) throw ConfigError("endpoint id must not be empty");
      if (!ids.insert(e.id).second) throw ConfigError("duplicate endpoint id '" + e.id + "'");
    }
    llm.params.validate();
    if (llm.gateway.retry.max_attempts < 1) throw ConfigError("llm.gateway.max_attempts must be >= 1");
    if (llm.gateway.max_in_flight < 1) throw ConfigError("llm.gateway.max_in_flight must be >= 1");
    if (llm.gateway.max_requests_per_second < 0) throw ConfigError("llm.gateway.max_requests_per_second must be >= 0");
    if (llm.http_timeout_s < 1) throw ConfigError("llm.http_timeout_s must be >= 1");
    if (augment.max_fix_iterations < 0) throw ConfigError("augment.max_fix_iterations must be >= 0");
    if (reflect.max_iterations < 0) throw ConfigError("reflect.max_iterations must be >= 0");
    if (eval.n < 1) throw ConfigError("eval.n must be >= 1");
    for (int k : eval.ks) {
      if (k < 1 || k > eval.n) throw ConfigError("eval.ks entries must lie in 1..eval.n");
    }
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    for (const auto* p : {&augment.params, &reflect.params_gen, &reflect.params_fix, &eval.params}) {
      if (*p) p->value().validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

BackendEndpoint RunConfig::resolve_endpoint(const std::string& id, EndpointRole role) const {
  for (const auto& e : llm.endpoints) {
    if (id.empty() ? e.role == role : e.id == id) {
      if (e.role != role) {
        throw ConfigError("endpoint '" + id + "' has role " + std::string(EndpointRoleName(e.role)) +
                          ", expected " + std::string(EndpointRoleName(role)));
      }
      return e;
    }
  }
  if (id.empty()) throw ConfigError("no endpoint with role " + std::string(EndpointRoleName(role)) + " configured");
  throw ConfigError("unknown endpoint '" + id + "'");
}

AugmentConfig RunConfig::augment_config() const {
  AugmentConfig a;
  a.max_fix_iterations = augment.max_fix_iterations;
  a.teacher = resolve_endpoint(augment.teacher, EndpointRole::kTeacher);
  a.params = augment.params.value_or(llm.params);
  return a;
}

ReflectionConfig RunConfig::reflection_config() const {
  ReflectionConfig r;
  r.gen = resolve_endpoint(reflect.gen, EndpointRole::kGen);
  r.fix = resolve_endpoint(reflect.fix, EndpointRole::kFix);
  r.max_iterations = reflect.max_iterations;
  r.params_gen = reflect.params_gen.value_or(llm.params);
  r.params_fix = reflect.params_fix.value_or(llm.params);
  return r;
}

FixerConfig RunConfig::fixer_config() const {
  return FixerConfig{resolve_endpoint(eval.fixer, EndpointRole::kFix), eval.params.value_or(llm.params)};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c = FromJsonUnchecked(j);
  } catch (const ConfigError&) {
    throw;
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value type: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json endpoints = nlohmann::json::array();
  for (const auto& e : c.llm.endpoints) endpoints.push_back(to_json(e));
  return {
      {"filter", ToJson(c.filter)},
      {"llm",
       {{"endpoints", std::move(endpoints)},
        {"params", to_json(c.llm.params)},
        {"gateway", ToJson(c.llm.gateway)},
        {"http_timeout_s", c.llm.http_timeout_s}}},
      {"toolchain", to_json(c.toolchain)},
      {"augment",
       {{"max_fix_iterations", c.augment.max_fix_iterations},
        {"teacher", c.augment.teacher},
        {"params", OptionalParamsJson(c.augment.params)}}},
      {"reflect",
       {{"max_iterations", c.reflect.max_iterations},
        {"gen", c.reflect.gen},
        {"fix", c.reflect.fix},
        {"params_gen", OptionalParamsJson(c.reflect.params_gen)},
        {"params_fix", OptionalParamsJson(c.reflect.params_fix)}}},
      {"eval",
       {{"n", c.eval.n}, {"ks", c.eval.ks}, {"fixer", c.eval.fixer}, {"params", OptionalParamsJson(c.eval.params)}}},
      {"paths", {{"input", c.paths.input}, {"output", c.paths.output}}},
      {"seed", c.seed},
      {"jobs", c.jobs},
  };
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("'" + path.string() + "' is not valid JSON");
  return run_config_from_json(j);
}

}  // namespace rtlrefine
