// Copyright 2026 The cryonoise Authors
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

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cryonoise/error.hpp"
#include "cryonoise/sparams.hpp"

namespace cryonoise {

/// Throws ConfigError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

/// Reads an optional field; ConfigError on a type mismatch.
template <class T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T required(const nlohmann::json& j, const char* key, std::string_view context) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string(context) + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(context) + ": field '" + key + "': " + e.what());
  }
}

nlohmann::json complex_to_json(Complex z);
Complex complex_from_json(const nlohmann::json& j);

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace cryonoise
