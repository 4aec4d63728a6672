/*
 * Copyright 2026 The mpai-sim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// Small helpers for strict JSON document parsing. Internal to the library.
#ifndef MPAI_SRC_JSON_UTIL_HPP
#define MPAI_SRC_JSON_UTIL_HPP

#include "mpai/common.hpp"

#include <json.hpp>

#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>

namespace mpai::detail {

using nlohmann::json;

inline json parse_document(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error &e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

/// Rejects members not in `allowed`.
inline void check_fields(const json &obj, std::initializer_list<std::string_view> allowed,
                         const std::string &context) {
  if (!obj.is_object())
    throw ParseError(context + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw ParseError(context + ": unknown field '" + it.key() + "'");
  }
}

inline const json &require(const json &obj, std::string_view key,
                           const std::string &context) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(context + ": missing field '" + std::string(key) + "'");
  return *it;
}

inline std::string get_string(const json &obj, std::string_view key,
                              const std::string &context) {
  const json &v = require(obj, key, context);
  if (!v.is_string())
    throw ParseError(context + ": field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

inline double as_number(const json &v, const std::string &context) {
  if (!v.is_number())
    throw ParseError(context + ": expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d))
    throw ParseError(context + ": number must be finite");
  return d;
}

inline double get_number(const json &obj, std::string_view key,
                         const std::string &context) {
  return as_number(require(obj, key, context),
                   context + ": field '" + std::string(key) + "'");
}

inline std::int64_t as_int(const json &v, const std::string &context) {
  if (!v.is_number_integer())
    throw ParseError(context + ": expected an integer");
  return v.get<std::int64_t>();
}

} // namespace mpai::detail

#endif // MPAI_SRC_JSON_UTIL_HPP
