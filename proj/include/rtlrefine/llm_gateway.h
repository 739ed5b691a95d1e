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

// Chat-completion access for the teacher, generation and fix models.
//
// A ChatBackend moves one request over some transport (HTTP, or a scripted
// table in tests). LlmGateway wraps a backend with retries, an in-flight cap,
// a per-endpoint rate limit and an append-only call log.

#ifndef RTLREFINE_LLM_GATEWAY_H_
#define RTLREFINE_LLM_GATEWAY_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rtlrefine/jsonl.h"
#include "rtlrefine/prompts.h"
#include "rtlrefine/worker_pool.h"

namespace rtlrefine {

enum class EndpointRole { kTeacher, kGen, kFix };

std::string_view EndpointRoleName(EndpointRole role);
EndpointRole ParseEndpointRole(std::string_view name);

struct BackendEndpoint {
  std::string id;
  std::string base_url;
  std::string model_name;
  std::string api_key_env;  // name of the variable, never its value
  EndpointRole role = EndpointRole::kTeacher;
};

nlohmann::json to_json(const BackendEndpoint& e);
BackendEndpoint endpoint_from_json(const nlohmann::json& j);

struct CompletionParams {
  double temperature = 0.2;
  double top_p = 0.95;
  std::int64_t max_new_tokens = 2048;
  std::vector<std::string> stop_sequences;
  std::optional<std::int64_t> seed;

  void validate() const;
};

nlohmann::json to_json(const CompletionParams& p);
CompletionParams params_from_json(const nlohmann::json& j);

struct LlmResponse {
  std::string text;
  std::string backend_id;
  std::int64_t latency_ms = 0;
  int attempt = 1;
};

class BackendError : public std::runtime_error {
 public:
  enum class Kind { kTimeout, kTransport, kAuth, kRateLimited, kEmptyResponse };

  BackendError(Kind kind, const std::string& message);
  Kind kind() const { return kind_; }
  bool retryable() const {
    return kind_ == Kind::kTimeout || kind_ == Kind::kTransport || kind_ == Kind::kRateLimited;
  }

 private:
  Kind kind_;
};

std::string_view BackendErrorKindName(BackendError::Kind kind);
BackendError::Kind ParseBackendErrorKind(std::string_view name);

// A scripted backend received a request nobody scripted. Not a BackendError:
// it signals a broken test fixture and must not be absorbed as a model fault.
class UnscriptedCallError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ChatRequest {
  const BackendEndpoint& endpoint;
  const Prompt& prompt;
  const CompletionParams& params;
};

struct BackendReply {
  std::string text;
  std::int64_t latency_ms = 0;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Throws BackendError.
  virtual BackendReply send(const ChatRequest& request) = 0;
  // Cheap reachability check used before long runs.
  virtual bool probe(const BackendEndpoint& endpoint) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::int64_t initial_backoff_ms = 500;
  double multiplier = 2.0;
  std::int64_t max_backoff_ms = 8000;

  std::chrono::milliseconds backoff_before(int attempt) const;  // attempt >= 2
};

struct CallLogEntry {
  std::int64_t seq = 0;
  std::string endpoint_id;
  TemplateId template_id = TemplateId::kDescription;
  std::string inputs_digest;
  CompletionParams params;
  std::optional<std::string> response_text;
  std::optional<std::string> error;  // BackendErrorKindName when the attempt failed
  std::int64_t latency_ms = 0;
  int attempt = 1;
};

nlohmann::json to_json(const CallLogEntry& e);
CallLogEntry call_log_entry_from_json(const nlohmann::json& j);

// Append-only, thread-safe. Sequence numbers are assigned at append time.
class CallLog {
 public:
  CallLog() = default;
  // Also appends every entry to a JSONL file. Continues numbering after
  // `first_seq - 1` so resumed runs keep unique sequence numbers.
  CallLog(const std::filesystem::path& sink, bool append, std::int64_t first_seq = 1);

  std::int64_t append(CallLogEntry entry);
  std::vector<CallLogEntry> entries() const;
  std::size_t size() const;
  void flush();

 private:
  mutable std::mutex mu_;
  std::vector<CallLogEntry> entries_;
  std::int64_t next_seq_ = 1;
  std::unique_ptr<JsonlWriter> sink_;
};

struct GatewayOptions {
  RetryPolicy retry;
  int max_in_flight = 8;
  double max_requests_per_second = 0.0;  // per endpoint; 0 disables
};

class LlmGateway {
 public:
  LlmGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options,
             std::shared_ptr<CallLog> log = std::make_shared<CallLog>());

  // Retries retryable failures up to options.retry.max_attempts total
  // attempts. Throws BackendError (the last failure) or UnscriptedCallError.
  LlmResponse complete(const BackendEndpoint& endpoint, const Prompt& prompt,
                       const CompletionParams& params);

  bool probe(const BackendEndpoint& endpoint) { return backend_->probe(endpoint); }

  CallLog& log() { return *log_; }
  const GatewayOptions& options() const { return options_; }

  // Replaces the sleep used for backoff and rate limiting (tests).
  void set_sleep(std::function<void(std::chrono::milliseconds)> sleep) { sleep_ = std::move(sleep); }

 private:
  void wait_for_rate_slot(const std::string& endpoint_id);

  std::shared_ptr<ChatBackend> backend_;
  GatewayOptions options_;
  std::shared_ptr<CallLog> log_;
  Semaphore in_flight_;
  std::mutex rate_mu_;
  std::map<std::string, std::chrono::steady_clock::time_point> next_slot_;
  std::function<void(std::chrono::milliseconds)> sleep_;
};

// Scripted backend. Requests are matched on (template_id, inputs_digest,
// seed); the digest "*" matches any digest of that template and an entry
// without a seed matches any seed. Each entry replays its sequence in order
// and then repeats its last step.
class MockBackend : public ChatBackend {
 public:
  struct Step {
    std::optional<std::string> text;
    std::optional<BackendError::Kind> error;
    std::int64_t latency_ms = 0;
  };

  void script(TemplateId template_id, std::string inputs_digest, std::vector<Step> sequence,
              std::optional<std::int64_t> seed = std::nullopt);
  void script_text(const Prompt& prompt, std::vector<std::string> texts,
                   std::optional<std::int64_t> seed = std::nullopt);
  void mark_unreachable(const std::string& endpoint_id);

  static std::shared_ptr<MockBackend> from_json(const nlohmann::json& j);
  static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);
  // Builds a script that answers the logged requests the way they were answered.
  static std::shared_ptr<MockBackend> from_call_log(const std::vector<CallLogEntry>& entries);
  nlohmann::json to_json() const;

  BackendReply send(const ChatRequest& request) override;
  bool probe(const BackendEndpoint& endpoint) override;
  std::size_t calls() const;

 private:
  struct Key {
    TemplateId template_id;
    std::string digest;
    std::optional<std::int64_t> seed;
    auto operator<=>(const Key&) const = default;
  };
  struct Entry {
    std::vector<Step> sequence;
    std::size_t cursor = 0;
  };

  mutable std::mutex mu_;
  std::map<Key, Entry> entries_;
  std::vector<std::string> unreachable_;
  std::size_t calls_ = 0;
};

// OpenAI-style chat-completion client: POST {base_url}/chat/completions with
// {model, messages, temperature, top_p, max_tokens, stop, seed?}.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(int timeout_s = 120) : timeout_s_(timeout_s) {}

  BackendReply send(const ChatRequest& request) override;
  bool probe(const BackendEndpoint& endpoint) override;

  static nlohmann::json request_body(const ChatRequest& request);

 private:
  int timeout_s_;
};

}  // namespace rtlrefine

#endif  // RTLREFINE_LLM_GATEWAY_H_
