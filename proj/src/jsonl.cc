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

#include "rtlrefine/jsonl.h"

#include <sstream>

namespace rtlrefine {

SchemaError::SchemaError(const std::string& message, std::int64_t line)
    : std::runtime_error(message), line_(line) {}

std::string require_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string("missing field \"") + key + "\"");
  if (!it->is_string()) throw SchemaError(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view context) {
  if (!j.is_object()) throw SchemaError(std::string(context) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (std::string_view a : allowed) known = known || it.key() == a;
    if (!known) throw SchemaError("unknown key \"" + it.key() + "\" in " + std::string(context));
  }
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  return read_jsonl<nlohmann::json>(path, [](const nlohmann::json& j) { return j; });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out.flush()) throw IoError("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

std::string jsonl_line(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool append)
    : path_(path), out_(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc)) {
  if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
}

void JsonlWriter::write(const nlohmann::json& j) {
  const std::string line = jsonl_line(j);
  std::lock_guard lock(mu_);
  out_ << line;
  if (!out_) throw IoError("error writing '" + path_.string() + "'");
}

void JsonlWriter::flush() {
  std::lock_guard lock(mu_);
  out_.flush();
  if (!out_) throw IoError("error writing '" + path_.string() + "'");
}

}  // namespace rtlrefine
