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
// Numeric precision experiments: INT8 fake-quantization and binary16
// rounding of tensors, and the signal-to-quantization-noise ratio between an
// original tensor and its degraded copy.
#ifndef MPAI_QUANTLAB_HPP
#define MPAI_QUANTLAB_HPP

#include "mpai/netgraph.hpp"

#include <span>
#include <vector>

namespace mpai {

enum class QuantScheme { Symmetric, Asymmetric };

struct QuantParams {
  double scale = 1.0;
  int zero_point = 0;
  QuantScheme scheme = QuantScheme::Symmetric;
};

/// Values with a shape; length must equal the shape's element count.
class TensorSample {
public:
  TensorSample(std::vector<double> values, TensorShape shape);
  /// 1-D sample.
  explicit TensorSample(std::vector<double> values);

  const std::vector<double> &values() const { return values_; }
  const TensorShape &shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

private:
  std::vector<double> values_;
  TensorShape shape_;
};

inline constexpr int kInt8Min = -128;
inline constexpr int kInt8Max = 127;
inline constexpr double kFp16Max = 65504.0;

/// Min-max calibration. Symmetric: scale = max|v| / 127. Asymmetric: the
/// range is widened to include zero, scale = (max - min) / 255 and min maps
/// to -128. An all-zero tensor yields scale 1, zero point 0.
QuantParams fit_quant_params(const TensorSample &t,
                             QuantScheme scheme = QuantScheme::Symmetric);

/// clamp(round(v / scale) + zp, -128, 127), mapped back to reals.
TensorSample quantize_dequantize(const TensorSample &t, const QuantParams &p);
double quantize_dequantize(double v, const QuantParams &p);

/// Nearest binary16 value (ties to even), saturating to +-65504.
double round_to_fp16(double v);
TensorSample round_fp16(const TensorSample &t);

/// 10 log10(sum orig^2 / sum (orig - degraded)^2); +infinity when the error
/// is exactly zero. Throws ContractError for an all-zero original or a shape
/// mismatch.
double sqnr(const TensorSample &original, const TensorSample &degraded);

} // namespace mpai

#endif // MPAI_QUANTLAB_HPP
