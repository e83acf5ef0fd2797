// Copyright (c) 2026 The guided-ssl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "gssl/errors.hpp"

namespace gssl::json_util {

/// Throws ConfigError naming the first key of `j` not in `allowed`.
inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                                const std::string& context) {
  if (!j.is_object()) throw ConfigError(context, "expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw ConfigError(context.empty() ? key : context + "." + key, "unknown key");
  }
}

/// Reads `j[key]` into `out` when present, converting type errors to ConfigError.
template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& out, const std::string& context) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(context.empty() ? key : context + "." + key, e.what());
  }
}

template <typename T>
void read_required(const nlohmann::json& j, const char* key, T& out, const std::string& context) {
  if (!j.contains(key)) throw ConfigError(context.empty() ? key : context + "." + key, "missing required key");
  read_optional(j, key, out, context);
}

}  // namespace gssl::json_util
