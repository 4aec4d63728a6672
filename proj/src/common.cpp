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
#include "mpai/common.hpp"

#include <fstream>
#include <sstream>

namespace mpai {

std::string_view to_string(Precision p) {
  switch (p) {
  case Precision::FP32:
    return "FP32";
  case Precision::FP16:
    return "FP16";
  case Precision::INT8:
    return "INT8";
  }
  return "FP32";
}

Precision parse_precision(std::string_view text) {
  if (text == "FP32")
    return Precision::FP32;
  if (text == "FP16")
    return Precision::FP16;
  if (text == "INT8")
    return Precision::INT8;
  throw ParseError("unknown precision '" + std::string(text) +
                   "' (expected FP32, FP16 or INT8)");
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

} // namespace mpai
