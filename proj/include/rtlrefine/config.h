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


// The shared JSON run configuration read by every subcommand.

#ifndef RTLREFINE_CONFIG_H_
#define RTLREFINE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rtlrefine/augment_pipeline.h"
#include "rtlrefine/compile_harness.h"
#include "rtlrefine/corpus_filter.h"
#include "rtlrefine/evaluator.h"
#include "rtlrefine/llm_gateway.h"
#include "rtlrefine/reflect_engine.h"

namespace rtlrefine {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LlmSection {
  std::vector<BackendEndpoint> endpoints;
  CompletionParams params;  // defaults for every stage
  GatewayOptions gateway;
  int http_timeout_s = 120;
};

struct AugmentSection {
  int max_fix_iterations = 3;
  std::string teacher;  // endpoint id; empty picks the first Teacher endpoint
  std::optional<CompletionParams> params;
};

struct ReflectSection {
  int max_iterations = 3;
  std::string gen;
  std::string fix;
  std::optional<CompletionParams> params_gen;
  std::optional<CompletionParams> params_fix;
};

struct EvalSection {
  int n = 10;
  std::vector<int> ks = {1, 5, 10};
  std::string fixer;  // endpoint id; empty picks the first Fix endpoint
  std::optional<CompletionParams> params;
};

struct PathsSection {
  std::string input;
  std::string output;
};

struct RunConfig {
  FilterConfig filter;
  LlmSection llm;
  ToolchainConfig toolchain;
  AugmentSection augment;
  ReflectSection reflect;
  EvalSection eval;
  PathsSection paths;
  std::int64_t seed = 0;
  int jobs = 1;

  // Throws ConfigError.
  void validate() const;

  // The endpoint with this id (which must have `role`), or the first endpoint
  // of that role when id is empty. Throws ConfigError.
  BackendEndpoint resolve_endpoint(const std::string& id, EndpointRole role) const;

  AugmentConfig augment_config() const;
  ReflectionConfig reflection_config() const;
  FixerConfig fixer_config() const;
};

// Throws ConfigError, naming the offending key where possible.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

// Throws IoError when the file cannot be read, ConfigError otherwise.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace rtlrefine

#endif  // RTLREFINE_CONFIG_H_
