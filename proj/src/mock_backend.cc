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

#include <algorithm>
#include <utility>

#include "rtlrefine/llm_gateway.h"

namespace rtlrefine {
namespace {

MockBackend::Step StepFromJson(const nlohmann::json& j) {
  reject_unknown_keys(j, {"text", "error", "latency_ms"}, "mock step");
  MockBackend::Step step;
  step.text = optional_string(j, "text");
  if (auto err = optional_string(j, "error")) step.error = ParseBackendErrorKind(*err);
  step.latency_ms = j.value("latency_ms", std::int64_t{0});
  if (step.text.has_value() == step.error.has_value()) {
    throw SchemaError("mock step needs exactly one of \"text\" or \"error\"");
  }
  return step;
}

nlohmann::json StepToJson(const MockBackend::Step& s) {
  nlohmann::json j = nlohmann::json::object();
  if (s.text) j["text"] = *s.text;
  if (s.error) j["error"] = std::string(BackendErrorKindName(*s.error));
  if (s.latency_ms != 0) j["latency_ms"] = s.latency_ms;
  return j;
}

}  // namespace

void MockBackend::script(TemplateId template_id, std::string inputs_digest,
                         std::vector<Step> sequence, std::optional<std::int64_t> seed) {
  if (sequence.empty()) throw std::invalid_argument("mock sequence must not be empty");
  std::lock_guard lock(mu_);
  Entry& e = entries_[Key{template_id, std::move(inputs_digest), seed}];
  e.sequence.insert(e.sequence.end(), sequence.begin(), sequence.end());
}

void MockBackend::script_text(const Prompt& prompt, std::vector<std::string> texts,
                              std::optional<std::int64_t> seed) {
  std::vector<Step> steps;
  for (auto& t : texts) steps.push_back(Step{std::move(t), std::nullopt, 0});
  script(prompt.template_id, prompt.inputs_digest, std::move(steps), seed);
}

void MockBackend::mark_unreachable(const std::string& endpoint_id) {
  std::lock_guard lock(mu_);
  unreachable_.push_back(endpoint_id);
}

std::shared_ptr<MockBackend> MockBackend::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"responses", "unreachable"}, "mock backend");
  auto mock = std::make_shared<MockBackend>();
  for (const auto& r : j.value("responses", nlohmann::json::array())) {
    reject_unknown_keys(r, {"template_id", "inputs_digest", "seed", "sequence"}, "mock response");
    std::vector<Step> steps;
    for (const auto& s : r.at("sequence")) steps.push_back(StepFromJson(s));
    std::optional<std::int64_t> seed;
    if (r.contains("seed") && !r.at("seed").is_null()) seed = r.at("seed").get<std::int64_t>();
    mock->script(ParseTemplateId(require_string(r, "template_id")),
                 optional_string(r, "inputs_digest").value_or("*"), std::move(steps), seed);
  }
  for (const auto& id : j.value("unreachable", nlohmann::json::array())) {
    mock->mark_unreachable(id.get<std::string>());
  }
  return mock;
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::shared_ptr<MockBackend> MockBackend::from_call_log(const std::vector<CallLogEntry>& entries) {
  std::vector<const CallLogEntry*> ordered;
  for (const auto& e : entries) ordered.push_back(&e);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const CallLogEntry* a, const CallLogEntry* b) { return a->seq < b->seq; });
  auto mock = std::make_shared<MockBackend>();
  for (const CallLogEntry* e : ordered) {
    Step step;
    if (e->error) {
      step.error = ParseBackendErrorKind(*e->error);
    } else {
      step.text = e->response_text.value_or("");
    }
    step.latency_ms = e->latency_ms;
    mock->script(e->template_id, e->inputs_digest, {step}, e->params.seed);
  }
  return mock;
}

nlohmann::json MockBackend::to_json() const {
  std::lock_guard lock(mu_);
  nlohmann::json responses = nlohmann::json::array();
  for (const auto& [key, entry] : entries_) {
    nlohmann::json seq = nlohmann::json::array();
    for (const auto& s : entry.sequence) seq.push_back(StepToJson(s));
    nlohmann::json r = {{"template_id", std::string(TemplateIdName(key.template_id))},
                        {"inputs_digest", key.digest},
                        {"sequence", seq}};
    if (key.seed) r["seed"] = *key.seed;
    responses.push_back(std::move(r));
  }
  nlohmann::json j = {{"responses", responses}};
  if (!unreachable_.empty()) j["unreachable"] = unreachable_;
  return j;
}

BackendReply MockBackend::send(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  ++calls_;
  const TemplateId tid = request.prompt.template_id;
  const std::string& digest = request.prompt.inputs_digest;
  const std::optional<std::int64_t> seed = request.params.seed;
  Entry* entry = nullptr;
  for (const Key& k : {Key{tid, digest, seed}, Key{tid, digest, std::nullopt}, Key{tid, "*", seed},
                       Key{tid, "*", std::nullopt}}) {
    auto it = entries_.find(k);
    if (it != entries_.end()) {
      entry = &it->second;
      break;
    }
  }
  if (entry == nullptr) {
    throw UnscriptedCallError("no scripted response for template " +
                              std::string(TemplateIdName(tid)) + " digest " + digest +
                              (seed ? " seed " + std::to_string(*seed) : std::string()));
  }
  const Step& step = entry->sequence[std::min(entry->cursor, entry->sequence.size() - 1)];
  ++entry->cursor;
  if (step.error) throw BackendError(*step.error, "scripted failure");
  return BackendReply{*step.text, step.latency_ms};
}

bool MockBackend::probe(const BackendEndpoint& endpoint) {
  std::lock_guard lock(mu_);
  return std::find(unreachable_.begin(), unreachable_.end(), endpoint.id) == unreachable_.end();
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

}  // namespace rtlrefine
