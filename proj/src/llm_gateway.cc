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

#include "rtlrefine/llm_gateway.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>

namespace rtlrefine {

std::string_view EndpointRoleName(EndpointRole role) {
  switch (role) {
    case EndpointRole::kTeacher: return "Teacher";
    case EndpointRole::kGen: return "Gen";
    case EndpointRole::kFix: return "Fix";
  }
  return "?";
}

EndpointRole ParseEndpointRole(std::string_view name) {
  for (EndpointRole r : {EndpointRole::kTeacher, EndpointRole::kGen, EndpointRole::kFix}) {
    if (EndpointRoleName(r) == name) return r;
  }
  throw SchemaError("unknown endpoint role '" + std::string(name) + "'");
}

nlohmann::json to_json(const BackendEndpoint& e) {
  return {{"id", e.id},
          {"base_url", e.base_url},
          {"model_name", e.model_name},
          {"api_key_env", e.api_key_env},
          {"role", std::string(EndpointRoleName(e.role))}};
}

BackendEndpoint endpoint_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"id", "base_url", "model_name", "api_key_env", "role"}, "endpoint");
  BackendEndpoint e;
  e.id = require_string(j, "id");
  e.base_url = optional_string(j, "base_url").value_or("");
  e.model_name = optional_string(j, "model_name").value_or("");
  e.api_key_env = optional_string(j, "api_key_env").value_or("");
  e.role = ParseEndpointRole(require_string(j, "role"));
  return e;
}

void CompletionParams::validate() const {
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must be in (0, 1]");
  if (max_new_tokens <= 0) throw std::invalid_argument("max_new_tokens must be positive");
}

nlohmann::json to_json(const CompletionParams& p) {
  nlohmann::json j = {{"temperature", p.temperature},
                      {"top_p", p.top_p},
                      {"max_new_tokens", p.max_new_tokens},
                      {"stop_sequences", p.stop_sequences}};
  j["seed"] = p.seed ? nlohmann::json(*p.seed) : nlohmann::json(nullptr);
  return j;
}

CompletionParams params_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"temperature", "top_p", "max_new_tokens", "stop_sequences", "seed"},
                      "completion params");
  CompletionParams p;
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.max_new_tokens = j.value("max_new_tokens", p.max_new_tokens);
  if (j.contains("stop_sequences")) p.stop_sequences = j.at("stop_sequences").get<std::vector<std::string>>();
  if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::int64_t>();
  p.validate();
  return p;
}

BackendError::BackendError(Kind kind, const std::string& message)
    : std::runtime_error(std::string(BackendErrorKindName(kind)) + ": " + message), kind_(kind) {}

std::string_view BackendErrorKindName(BackendError::Kind kind) {
  switch (kind) {
    case BackendError::Kind::kTimeout: return "Timeout";
    case BackendError::Kind::kTransport: return "TransportError";
    case BackendError::Kind::kAuth: return "AuthError";
    case BackendError::Kind::kRateLimited: return "RateLimited";
    case BackendError::Kind::kEmptyResponse: return "EmptyResponse";
  }
  return "?";
}

BackendError::Kind ParseBackendErrorKind(std::string_view name) {
  using K = BackendError::Kind;
  for (K k : {K::kTimeout, K::kTransport, K::kAuth, K::kRateLimited, K::kEmptyResponse}) {
    if (BackendErrorKindName(k) == name) return k;
  }
  // Short aliases for hand-written mock scripts.
  if (name == "timeout") return K::kTimeout;
  if (name == "transport") return K::kTransport;
  if (name == "auth") return K::kAuth;
  if (name == "rate_limited") return K::kRateLimited;
  if (name == "empty") return K::kEmptyResponse;
  throw SchemaError("unknown backend error kind '" + std::string(name) + "'");
}

std::chrono::milliseconds RetryPolicy::backoff_before(int attempt) const {
  const double scaled = static_cast<double>(initial_backoff_ms) * std::pow(multiplier, attempt - 2);
  const double capped = std::min(scaled, static_cast<double>(max_backoff_ms));
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::max(0.0, capped)));
}

nlohmann::json to_json(const CallLogEntry& e) {
  nlohmann::json j = {{"seq", e.seq},
                      {"endpoint_id", e.endpoint_id},
                      {"template_id", std::string(TemplateIdName(e.template_id))},
                      {"inputs_digest", e.inputs_digest},
                      {"params", to_json(e.params)},
                      {"latency_ms", e.latency_ms},
                      {"attempt", e.attempt}};
  j["response_text"] = e.response_text ? nlohmann::json(*e.response_text) : nlohmann::json(nullptr);
  if (e.error) j["error"] = *e.error;
  return j;
}

CallLogEntry call_log_entry_from_json(const nlohmann::json& j) {
  CallLogEntry e;
  e.seq = j.at("seq").get<std::int64_t>();
  e.endpoint_id = require_string(j, "endpoint_id");
  e.template_id = ParseTemplateId(require_string(j, "template_id"));
  e.inputs_digest = require_string(j, "inputs_digest");
  e.params = params_from_json(j.at("params"));
  e.response_text = optional_string(j, "response_text");
  e.error = optional_string(j, "error");
  e.latency_ms = j.value("latency_ms", std::int64_t{0});
  e.attempt = j.value("attempt", 1);
  return e;
}

CallLog::CallLog(const std::filesystem::path& sink, bool append, std::int64_t first_seq)
    : next_seq_(first_seq), sink_(std::make_unique<JsonlWriter>(sink, append)) {}

std::int64_t CallLog::append(CallLogEntry entry) {
  std::lock_guard lock(mu_);
  entry.seq = next_seq_++;
  if (sink_) sink_->write(to_json(entry));
  entries_.push_back(std::move(entry));
  return entries_.back().seq;
}

std::vector<CallLogEntry> CallLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void CallLog::flush() {
  std::lock_guard lock(mu_);
  if (sink_) sink_->flush();
}

LlmGateway::LlmGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options,
                       std::shared_ptr<CallLog> log)
    : backend_(std::move(backend)),
      options_(options),
      log_(std::move(log)),
      in_flight_(options.max_in_flight),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (options_.retry.max_attempts < 1) throw std::invalid_argument("retry.max_attempts must be >= 1");
}

void LlmGateway::wait_for_rate_slot(const std::string& endpoint_id) {
  if (options_.max_requests_per_second <= 0.0) return;
  using Clock = std::chrono::steady_clock;
  const auto interval = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / options_.max_requests_per_second));
  Clock::time_point slot;
  {
    std::lock_guard lock(rate_mu_);
    const auto now = Clock::now();
    auto& next = next_slot_[endpoint_id];
    slot = std::max(now, next);
    next = slot + interval;
  }
  const auto wait = slot - Clock::now();
  if (wait > Clock::duration::zero()) {
    sleep_(std::chrono::duration_cast<std::chrono::milliseconds>(wait));
  }
}

LlmResponse LlmGateway::complete(const BackendEndpoint& endpoint, const Prompt& prompt,
                                 const CompletionParams& params) {
  const ChatRequest request{endpoint, prompt, params};
  for (int attempt = 1;; ++attempt) {
    if (attempt > 1) sleep_(options_.retry.backoff_before(attempt));
    wait_for_rate_slot(endpoint.id);

    CallLogEntry entry;
    entry.endpoint_id = endpoint.id;
    entry.template_id = prompt.template_id;
    entry.inputs_digest = prompt.inputs_digest;
    entry.params = params;
    entry.attempt = attempt;
    try {
      BackendReply reply;
      {
        SemaphoreGuard guard(in_flight_);
        reply = backend_->send(request);
      }
      if (reply.text.empty()) throw BackendError(BackendError::Kind::kEmptyResponse, "empty completion");
      entry.response_text = reply.text;
      entry.latency_ms = reply.latency_ms;
      log_->append(entry);
      return LlmResponse{std::move(reply.text), endpoint.id, reply.latency_ms, attempt};
    } catch (const BackendError& e) {
      entry.error = std::string(BackendErrorKindName(e.kind()));
      log_->append(entry);
      if (!e.retryable() || attempt >= options_.retry.max_attempts) throw;
      spdlog::debug("endpoint {} attempt {} failed: {}", endpoint.id, attempt, e.what());
    }
  }
}

}  // namespace rtlrefine
