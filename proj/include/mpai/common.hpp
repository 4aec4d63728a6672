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
#ifndef MPAI_COMMON_HPP
#define MPAI_COMMON_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mpai {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (bad JSON, wrong field type, unknown field).
class ParseError : public Error {
public:
  using Error::Error;
};

/// Structurally valid document that violates a model invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Device or platform configuration cannot serve a request.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Caller violated an operation precondition.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Calibration could not be carried out as requested.
class CalibrationError : public Error {
public:
  using Error::Error;
};

/// Numeric precision of a tensor as executed on a device.
enum class Precision { FP32, FP16, INT8 };

constexpr int element_bits(Precision p) {
  switch (p) {
  case Precision::FP32:
    return 32;
  case Precision::FP16:
    return 16;
  case Precision::INT8:
    return 8;
  }
  return 32;
}

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view text);

/// Reads a whole file; throws Error naming the path when it cannot be opened.
std::string read_text_file(const std::filesystem::path &path);

} // namespace mpai

#endif // MPAI_COMMON_HPP
