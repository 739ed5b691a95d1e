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

// JSON Lines helpers shared by every dataset reader and writer.

#ifndef RTLREFINE_JSONL_H_
#define RTLREFINE_JSONL_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rtlrefine {

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record does not match the expected schema. `line` is 1-based, 0 when the
// record did not come from a file.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& message, std::int64_t line = 0);
  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_;
};

std::string require_string(const nlohmann::json& j, const char* key);
std::optional<std::string> optional_string(const nlohmann::json& j, const char* key);

// Throws SchemaError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

// Reads a JSONL file; blank lines are skipped. `parse` converts one object and
// may throw SchemaError or nlohmann exceptions, both of which are rethrown as
// SchemaError with the line number attached.
template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path,
                          const std::function<T(const nlohmann::json&)>& parse);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// One compact JSON object per line, keys sorted (nlohmann's default), so equal
// records serialize to equal bytes.
std::string jsonl_line(const nlohmann::json& j);

// Append-only JSONL sink safe for concurrent writers.
class JsonlWriter {
 public:
  JsonlWriter(const std::filesystem::path& path, bool append);

  void write(const nlohmann::json& j);
  void flush();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
};

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path,
                          const std::function<T(const nlohmann::json&)>& parse) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<T> out;
  std::string text;
  std::int64_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(text);
      if (!j.is_object()) throw SchemaError("expected a JSON object");
      out.push_back(parse(j));
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return out;
}

}  // namespace rtlrefine

#endif  // RTLREFINE_JSONL_H_
