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

#include <chrono>
#include <cstdlib>

#include "httplib.h"
#include "rtlrefine/llm_gateway.h"

namespace rtlrefine {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl Split(const std::string& base_url) {
  const std::size_t scheme = base_url.find("://");
  if (scheme == std::string::npos) {
    throw BackendError(BackendError::Kind::kTransport, "base_url lacks a scheme: " + base_url);
  }
  const std::size_t slash = base_url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = base_url.substr(0, slash);
  out.path = slash == std::string::npos ? "" : base_url.substr(slash);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

httplib::Headers AuthHeaders(const BackendEndpoint& endpoint) {
  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key != nullptr && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  return headers;
}

}  // namespace

nlohmann::json HttpBackend::request_body(const ChatRequest& request) {
  nlohmann::json body = {
      {"model", request.endpoint.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt.text}}})},
      {"temperature", request.params.temperature},
      {"top_p", request.params.top_p},
      {"max_tokens", request.params.max_new_tokens},
      {"stop", request.params.stop_sequences},
  };
  if (request.params.seed) body["seed"] = *request.params.seed;
  return body;
}

BackendReply HttpBackend::send(const ChatRequest& request) {
  using K = BackendError::Kind;
  const SplitUrl url = Split(request.endpoint.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout_s_, 0);
  client.set_read_timeout(timeout_s_, 0);
  client.set_write_timeout(timeout_s_, 0);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(url.path + "/chat/completions", AuthHeaders(request.endpoint),
                         request_body(request).dump(), "application/json");
  const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      throw BackendError(K::kTimeout, httplib::to_string(err));
    }
    throw BackendError(K::kTransport, httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403) {
    throw BackendError(K::kAuth, "HTTP " + std::to_string(res->status));
  }
  if (res->status == 429) throw BackendError(K::kRateLimited, "HTTP 429");
  if (res->status == 408 || res->status == 504) {
    throw BackendError(K::kTimeout, "HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(K::kTransport, "HTTP " + std::to_string(res->status));
  }

  nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw BackendError(K::kTransport, "response is not JSON");
  const auto choices = body.find("choices");
  if (choices == body.end() || !choices->is_array() || choices->empty()) {
    throw BackendError(K::kEmptyResponse, "response has no choices");
  }
  const nlohmann::json& first = (*choices)[0];
  std::string text;
  if (first.contains("message") && first["message"].contains("content") &&
      first["message"]["content"].is_string()) {
    text = first["message"]["content"].get<std::string>();
  } else if (first.contains("text") && first["text"].is_string()) {
    text = first["text"].get<std::string>();
  }
  if (text.empty()) throw BackendError(K::kEmptyResponse, "completion has no content");
  return BackendReply{std::move(text), latency};
}

bool HttpBackend::probe(const BackendEndpoint& endpoint) {
  SplitUrl url;
  try {
    url = Split(endpoint.base_url);
  } catch (const BackendError&) {
    return false;
  }
  httplib::Client client(url.origin);
  client.set_connection_timeout(std::min(timeout_s_, 10), 0);
  client.set_read_timeout(std::min(timeout_s_, 10), 0);
  // Any HTTP answer, even an error status, proves the server is there.
  auto res = client.Get(url.path + "/models", AuthHeaders(endpoint));
  return static_cast<bool>(res);
}

}  // namespace rtlrefine
