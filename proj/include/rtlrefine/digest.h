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

#ifndef RTLREFINE_DIGEST_H_
#define RTLREFINE_DIGEST_H_

#include <initializer_list>
#include <string>
#include <string_view>

namespace rtlrefine {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Digest of a field tuple. Each field is length-prefixed so ("ab", "c") and
// ("a", "bc") differ.
std::string fields_digest(std::initializer_list<std::string_view> fields);

}  // namespace rtlrefine

#endif  // RTLREFINE_DIGEST_H_
